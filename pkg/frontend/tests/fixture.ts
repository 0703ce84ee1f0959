// Deterministic fake of the run API, mirroring the backend's candidate
// selection semantics (top-n by score, ties to the earlier line, output in
// chronological order) so superset/ordering properties are real.

import type { CandidateItem, CandidatesResponse, WindowsResponse } from "../src/api"

export type FixtureLine = {
    id: number
    pos: number
    ts: number
    service: string
    msg: string
    score: number
    in_truth: boolean
}

export type FixtureWindow = {
    id: number
    failure_ts: number
    lines: FixtureLine[]
}

// small multiplicative PRNG; stable across runs
function prng(seed: number): () => number {
    let state = seed >>> 0 || 1
    return () => {
        state = (state * 48271) % 2147483647
        return state / 2147483647
    }
}

export function buildFixture(windowCount = 3, linesPerWindow = 60): FixtureWindow[] {
    const windows: FixtureWindow[] = []
    for (let w = 0; w < windowCount; w++) {
        const rand = prng(1000 + w)
        const base = 1_700_000_000_000_000 + w * 60_000_000
        const lines: FixtureLine[] = []
        for (let i = 0; i < linesPerWindow; i++) {
            lines.push({
                id: w * 1000 + i,
                pos: i,
                ts: base + i * 40_000,
                service: `svc-${(w * 3 + (i % 5)) % 7}`,
                msg: `event ${i} of window ${w} code RC${w}${i % 9}`,
                score: Math.round(rand() * 4000) / 1000,
                in_truth: i % 4 === 0,
            })
        }
        windows.push({ id: w, failure_ts: base + linesPerWindow * 40_000, lines })
    }
    return windows
}

export function topN(win: FixtureWindow, n: number): CandidateItem[] {
    const ranked = [...win.lines].sort(
        (a, b) => b.score - a.score || a.ts - b.ts || a.id - b.id,
    )
    const chosen = ranked.slice(0, Math.min(n, ranked.length))
    chosen.sort((a, b) => a.ts - b.ts || a.id - b.id)
    return chosen.map((line) => ({
        line_id: line.id,
        pos: line.pos,
        ts: line.ts,
        service: line.service,
        msg: line.msg,
        score: line.score,
        in_truth: line.in_truth,
    }))
}

export type FetchStub = {
    fetch: typeof fetch
    calls: string[]
    failNext: { value: boolean }
    delayNext: { promise: Promise<void> | null }
}

export function makeFetchStub(windows: FixtureWindow[]): FetchStub {
    const calls: string[] = []
    const failNext = { value: false }
    const delayNext: { promise: Promise<void> | null } = { promise: null }

    const json = (payload: unknown, status = 200): Response =>
        new Response(JSON.stringify(payload), {
            status,
            headers: { "Content-Type": "application/json" },
        })

    const impl = async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
        const url = String(input)
        calls.push(url)
        if (delayNext.promise) {
            const wait = delayNext.promise
            delayNext.promise = null
            await wait
        }
        if (init?.signal?.aborted) {
            throw new DOMException("aborted", "AbortError")
        }
        if (failNext.value) {
            failNext.value = false
            throw new TypeError("network unreachable")
        }
        const parsed = new URL(url, "http://fixture.test")
        const parts = parsed.pathname.split("/").filter(Boolean)

        if (parsed.pathname === "/api/windows") {
            const payload: WindowsResponse = {
                windows: windows.map((w) => ({
                    id: w.id,
                    failure_ts: w.failure_ts,
                    size: w.lines.length,
                    has_truth: true,
                })),
                scorers: ["logrca", "tree"],
            }
            return json(payload)
        }
        if (parts.length === 4 && parts[1] === "windows" && parts[3] === "candidates") {
            const win = windows.find((w) => w.id === Number(parts[2]))
            if (!win) return json({ error: `unknown window ${parts[2]}` }, 404)
            const n = Number(parsed.searchParams.get("n") ?? "10")
            if (!Number.isInteger(n) || n < 1) return json({ error: "n must be positive" }, 400)
            const items = topN(win, n)
            const payload: CandidatesResponse = {
                window_id: win.id,
                scorer: parsed.searchParams.get("scorer") ?? "logrca",
                n,
                count: items.length,
                candidates: items,
            }
            return json(payload)
        }
        if (parts.length === 4 && parts[1] === "windows" && parts[3] === "lines") {
            const win = windows.find((w) => w.id === Number(parts[2]))
            if (!win) return json({ error: `unknown window ${parts[2]}` }, 404)
            const from = Math.max(0, Number(parsed.searchParams.get("from") ?? "0"))
            const to = Math.min(win.lines.length - 1, Number(parsed.searchParams.get("to") ?? "0"))
            const lines = win.lines.slice(from, to + 1).map((line) => ({
                id: line.id,
                pos: line.pos,
                ts: line.ts,
                service: line.service,
                msg: line.msg,
                in_truth: line.in_truth,
            }))
            return json({ window_id: win.id, from, to, lines })
        }
        return json({ error: `no such endpoint ${parsed.pathname}` }, 404)
    }

    return { fetch: impl as typeof fetch, calls, failNext, delayNext }
}
