// Typed client for the read-only run API. The UI never recomputes scores or
// ordering; everything rendered comes verbatim from these endpoints.

export type WindowSummary = {
    id: number
    failure_ts: number
    size: number
    has_truth: boolean
}

export type WindowsResponse = {
    windows: WindowSummary[]
    scorers: string[]
}

export type CandidateItem = {
    line_id: number
    pos: number
    ts: number
    service: string
    msg: string
    severity?: string | null
    score: number
    in_truth?: boolean
}

export type CandidatesResponse = {
    window_id: number
    scorer: string
    n: number
    count: number
    candidates: CandidateItem[]
}

export type ContextLine = {
    id: number
    pos: number
    ts: number
    service: string
    msg: string
    severity?: string | null
    in_truth?: boolean
}

export type LinesResponse = {
    window_id: number
    from: number
    to: number
    lines: ContextLine[]
}

export class ApiError extends Error {
    constructor(public status: number, message: string) {
        super(message)
    }
}

async function getJson<T>(path: string, signal?: AbortSignal): Promise<T> {
    const resp = await fetch(path, { signal })
    if (!resp.ok) {
        let detail = `${resp.status}`
        try {
            const body = await resp.json()
            if (body && typeof body.error === "string") detail = body.error
        } catch {
            // non-JSON error body; keep the status text
        }
        throw new ApiError(resp.status, detail)
    }
    return (await resp.json()) as T
}

export class ApiClient {
    constructor(private base: string = "") {}

    listWindows(signal?: AbortSignal): Promise<WindowsResponse> {
        return getJson(`${this.base}/api/windows`, signal)
    }

    candidates(windowId: number, n: number, scorer?: string, signal?: AbortSignal): Promise<CandidatesResponse> {
        const scorerArg = scorer ? `&scorer=${encodeURIComponent(scorer)}` : ""
        return getJson(`${this.base}/api/windows/${windowId}/candidates?n=${n}${scorerArg}`, signal)
    }

    lines(windowId: number, from: number, to: number, signal?: AbortSignal): Promise<LinesResponse> {
        return getJson(`${this.base}/api/windows/${windowId}/lines?from=${from}&to=${to}`, signal)
    }

    report(signal?: AbortSignal): Promise<unknown> {
        return getJson(`${this.base}/api/report`, signal)
    }
}
