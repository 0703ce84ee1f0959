// DOM builders. Rows render strictly in the order the API returns them
// (chronological); changing n never reorders anything by score.

import type { CandidateItem, ContextLine, WindowSummary } from "./api"

export function formatTimestamp(micros: number): string {
    const date = new Date(micros / 1000)
    const hms = date.toISOString().slice(11, 23)
    return hms
}

export function candidateRow(item: CandidateItem, maxScore: number): HTMLTableRowElement {
    const row = document.createElement("tr")
    row.className = "candidate-row"
    row.dataset.lineId = String(item.line_id)
    row.dataset.pos = String(item.pos)

    const time = document.createElement("td")
    time.className = "col-time"
    time.textContent = formatTimestamp(item.ts)

    const service = document.createElement("td")
    service.className = "col-service"
    service.textContent = item.service

    const msg = document.createElement("td")
    msg.className = "col-msg"
    msg.textContent = item.msg
    if (item.in_truth === true) {
        const badge = document.createElement("span")
        badge.className = "truth-badge"
        badge.textContent = "root cause"
        msg.appendChild(badge)
    }

    const score = document.createElement("td")
    score.className = "col-score"
    const bar = document.createElement("div")
    bar.className = "score-bar"
    const width = maxScore > 0 ? Math.max(2, Math.round((item.score / maxScore) * 100)) : 2
    bar.style.width = `${width}%`
    const value = document.createElement("span")
    value.className = "score-value"
    value.textContent = item.score.toFixed(3)
    score.append(bar, value)

    row.append(time, service, msg, score)
    return row
}

export function renderCandidates(tbody: HTMLElement, items: CandidateItem[]): void {
    tbody.replaceChildren()
    const maxScore = items.reduce((acc, it) => Math.max(acc, it.score), 0)
    for (const item of items) {
        tbody.appendChild(candidateRow(item, maxScore))
    }
}

export function windowListItem(summary: WindowSummary): HTMLLIElement {
    const li = document.createElement("li")
    li.className = "window-item"
    li.dataset.windowId = String(summary.id)
    const when = new Date(summary.failure_ts / 1000).toISOString().replace("T", " ").slice(0, 19)
    li.innerHTML = ""
    const title = document.createElement("div")
    title.className = "window-title"
    title.textContent = `failure ${summary.id}`
    const meta = document.createElement("div")
    meta.className = "window-meta"
    meta.textContent = `${when} · ${summary.size} lines${summary.has_truth ? " · labeled" : ""}`
    li.append(title, meta)
    return li
}

export function renderContext(container: HTMLElement, lines: ContextLine[], focusId: number): void {
    container.replaceChildren()
    for (const line of lines) {
        const row = document.createElement("div")
        row.className = "context-line" + (line.id === focusId ? " focus" : "")
        row.dataset.pos = String(line.pos)
        const ts = document.createElement("span")
        ts.className = "ctx-time"
        ts.textContent = formatTimestamp(line.ts)
        const svc = document.createElement("span")
        svc.className = "ctx-service"
        svc.textContent = line.service
        const msg = document.createElement("span")
        msg.className = "ctx-msg" + (line.in_truth ? " truth" : "")
        msg.textContent = line.msg
        row.append(ts, svc, msg)
        container.appendChild(row)
    }
}
