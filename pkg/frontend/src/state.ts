// Investigation state lives entirely in the URL query string, so a view is
// shareable as a link and a reload restores it. Nothing else is persisted.

export const MIN_N = 1
export const MAX_N = 200
export const DEFAULT_N = 10

export type ViewState = {
    windowId: number | null
    n: number
    scorer: string | null
}

export function clampN(value: number): number {
    if (!Number.isFinite(value)) return DEFAULT_N
    return Math.min(MAX_N, Math.max(MIN_N, Math.round(value)))
}

export function parseState(search: string): ViewState {
    const params = new URLSearchParams(search)
    const rawWindow = params.get("window")
    const rawN = params.get("n")
    const windowId = rawWindow !== null && /^\d+$/.test(rawWindow) ? Number(rawWindow) : null
    const n = rawN !== null && /^\d+$/.test(rawN) ? clampN(Number(rawN)) : DEFAULT_N
    return { windowId, n, scorer: params.get("scorer") }
}

export function encodeState(state: ViewState): string {
    const params = new URLSearchParams()
    if (state.windowId !== null) params.set("window", String(state.windowId))
    params.set("n", String(state.n))
    if (state.scorer) params.set("scorer", state.scorer)
    return `?${params.toString()}`
}
