// Application shell: a window list, a threshold slider, the candidate table,
// and a context pane. The UI is a pure view over the run API; stale views
// survive API errors behind a dismissable banner, and a newer threshold
// input aborts any in-flight candidates fetch (last write wins).

import { ApiClient, type CandidatesResponse, type WindowSummary } from "./api"
import { clampN, DEFAULT_N, encodeState, MAX_N, MIN_N, parseState, type ViewState } from "./state"
import { renderCandidates, renderContext, windowListItem } from "./views"

const CONTEXT_SPAN = 20

export class App {
    state: ViewState = { windowId: null, n: DEFAULT_N, scorer: null }
    windows: WindowSummary[] = []
    scorers: string[] = []
    lastResponse: CandidatesResponse | null = null
    private inflight: AbortController | null = null

    private list: HTMLElement
    private tbody: HTMLElement
    private slider: HTMLInputElement
    private nLabel: HTMLElement
    private scorerSelect: HTMLSelectElement
    private banner: HTMLElement
    private contextPane: HTMLElement
    private contextBody: HTMLElement
    private title: HTMLElement

    constructor(private root: HTMLElement, private api: ApiClient, private pushUrl = true) {
        this.root.innerHTML = `
      <div class="layout">
        <aside class="sidebar">
          <h1>logcause</h1>
          <ul id="window-list"></ul>
        </aside>
        <main class="main">
          <div id="banner" class="banner hidden"></div>
          <div class="toolbar">
            <span id="window-title" class="window-title-main">pick a failure</span>
            <label class="slider-label">candidates n =
              <output id="n-label">${DEFAULT_N}</output>
            </label>
            <input id="n-slider" type="range" min="${MIN_N}" max="${MAX_N}" value="${DEFAULT_N}" step="1">
            <select id="scorer-select" title="scorer"></select>
          </div>
          <table class="candidates">
            <thead><tr><th>time</th><th>service</th><th>message</th><th>score</th></tr></thead>
            <tbody id="candidate-body"></tbody>
          </table>
          <div id="context-pane" class="context hidden">
            <div class="context-header">
              <span>context</span>
              <button id="context-close" type="button">close</button>
            </div>
            <div id="context-body"></div>
          </div>
        </main>
      </div>`
        this.list = this.byId("window-list")
        this.tbody = this.byId("candidate-body")
        this.slider = this.byId("n-slider") as HTMLInputElement
        this.nLabel = this.byId("n-label")
        this.scorerSelect = this.byId("scorer-select") as HTMLSelectElement
        this.banner = this.byId("banner")
        this.contextPane = this.byId("context-pane")
        this.contextBody = this.byId("context-body")
        this.title = this.byId("window-title")

        this.slider.addEventListener("input", () => {
            void this.setThreshold(Number(this.slider.value))
        })
        this.scorerSelect.addEventListener("change", () => {
            this.state.scorer = this.scorerSelect.value || null
            this.syncUrl()
            void this.refreshCandidates()
        })
        this.list.addEventListener("click", (event) => {
            const item = (event.target as HTMLElement).closest<HTMLElement>(".window-item")
            if (item?.dataset.windowId) void this.selectWindow(Number(item.dataset.windowId))
        })
        this.tbody.addEventListener("click", (event) => {
            const row = (event.target as HTMLElement).closest<HTMLTableRowElement>(".candidate-row")
            if (row?.dataset.pos) {
                void this.openContext(Number(row.dataset.pos), Number(row.dataset.lineId))
            }
        })
        this.byId("context-close").addEventListener("click", () => {
            this.contextPane.classList.add("hidden")
        })
    }

    private byId(id: string): HTMLElement {
        const el = this.root.querySelector<HTMLElement>(`#${id}`)
        if (!el) throw new Error(`missing element #${id}`)
        return el
    }

    async start(search: string = window.location.search): Promise<void> {
        this.state = parseState(search)
        this.slider.value = String(this.state.n)
        this.nLabel.textContent = String(this.state.n)
        try {
            const listing = await this.api.listWindows()
            this.windows = listing.windows
            this.scorers = listing.scorers
        } catch (err) {
            this.showError(`cannot load windows: ${(err as Error).message}`)
            return
        }
        this.scorerSelect.replaceChildren(
            ...this.scorers.map((name) => {
                const opt = document.createElement("option")
                opt.value = name
                opt.textContent = name
                return opt
            }),
        )
        if (this.state.scorer && this.scorers.includes(this.state.scorer)) {
            this.scorerSelect.value = this.state.scorer
        } else {
            this.state.scorer = this.scorers[0] ?? null
        }
        this.list.replaceChildren(...this.windows.map(windowListItem))
        const target = this.state.windowId ?? this.windows[0]?.id ?? null
        if (target !== null) await this.selectWindow(target)
    }

    async selectWindow(windowId: number): Promise<void> {
        this.state.windowId = windowId
        this.syncUrl()
        for (const item of this.list.querySelectorAll<HTMLElement>(".window-item")) {
            item.classList.toggle("selected", Number(item.dataset.windowId) === windowId)
        }
        this.contextPane.classList.add("hidden")
        await this.refreshCandidates()
    }

    async setThreshold(n: number): Promise<void> {
        this.state.n = clampN(n)
        this.nLabel.textContent = String(this.state.n)
        this.slider.value = String(this.state.n)
        this.syncUrl()
        await this.refreshCandidates()
    }

    async refreshCandidates(): Promise<void> {
        if (this.state.windowId === null) return
        this.inflight?.abort()
        const controller = new AbortController()
        this.inflight = controller
        try {
            const resp = await this.api.candidates(
                this.state.windowId, this.state.n, this.state.scorer ?? undefined, controller.signal,
            )
            if (controller.signal.aborted) return
            this.lastResponse = resp
            renderCandidates(this.tbody, resp.candidates)
            this.title.textContent = `failure ${resp.window_id} · ${resp.count} candidates (${resp.scorer})`
            this.hideError()
        } catch (err) {
            if ((err as Error).name === "AbortError") return
            this.showError(`candidates unavailable: ${(err as Error).message}`)
        } finally {
            if (this.inflight === controller) this.inflight = null
        }
    }

    async openContext(pos: number, lineId: number): Promise<void> {
        if (this.state.windowId === null) return
        try {
            const resp = await this.api.lines(
                this.state.windowId,
                Math.max(0, pos - CONTEXT_SPAN),
                pos + CONTEXT_SPAN,
            )
            renderContext(this.contextBody, resp.lines, lineId)
            this.contextPane.classList.remove("hidden")
            this.hideError()
        } catch (err) {
            this.showError(`context unavailable: ${(err as Error).message}`)
        }
    }

    private showError(message: string): void {
        this.banner.textContent = message
        this.banner.classList.remove("hidden")
    }

    private hideError(): void {
        this.banner.classList.add("hidden")
    }

    private syncUrl(): void {
        if (!this.pushUrl) return
        const url = encodeState(this.state)
        window.history.replaceState(null, "", url)
    }
}

export function mount(root: HTMLElement, base = ""): App {
    const app = new App(root, new ApiClient(base))
    void app.start()
    return app
}
