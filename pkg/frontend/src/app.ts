// Single-page analyst console: open a session, steer epsilon upward,
// watch the loss and the receipt ledger, and stop when satisfied.

import { ApiError, SessionApi } from './api'
import { SessionView } from './state'

const api = new SessionApi('')
const view = new SessionView()

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id)
  if (!node) throw new Error(`missing element #${id}`)
  return node as T
}

function showError(message: string, field?: string) {
  const banner = el<HTMLDivElement>('error-banner')
  banner.textContent = field ? `${field}: ${message}` : message
  banner.hidden = false
}

function clearError() {
  el<HTMLDivElement>('error-banner').hidden = true
}

function setPending(pending: boolean) {
  view.pending = pending
  for (const id of ['open-btn', 'step-btn', 'stop-btn']) {
    el<HTMLButtonElement>(id).disabled = pending
  }
  render()
}

function render() {
  el<HTMLSpanElement>('status').textContent = view.status
  el<HTMLSpanElement>('badge').textContent = view.badge ?? ''

  const tbody = el<HTMLTableSectionElement>('ledger-body')
  tbody.innerHTML = ''
  for (const row of view.ledger()) {
    const tr = document.createElement('tr')
    const cells = [
      String(row.n),
      row.eps.toFixed(6),
      String(row.delta),
      row.time.toExponential(4),
      row.loss === null ? '—' : row.loss.toFixed(6),
      row.bit === null ? '—' : String(row.bit),
    ]
    for (const text of cells) {
      const td = document.createElement('td')
      td.textContent = text
      tr.appendChild(td)
    }
    tbody.appendChild(tr)
  }

  const stepBtn = el<HTMLButtonElement>('step-btn')
  const epsInput = el<HTMLInputElement>('eps-input')
  epsInput.min = String(view.currentEps)
  stepBtn.disabled = view.pending || !view.canSubmit(Number(epsInput.value))
  el<HTMLButtonElement>('stop-btn').disabled = view.pending || view.sessionId === null

  drawBoundary()
}

function drawBoundary() {
  const svg = el<HTMLElement>('boundary-plot')
  if (view.boundaryCurve.length === 0) {
    svg.innerHTML = ''
    return
  }
  const pts = view.boundaryCurve
  const xs = pts.map((p) => Math.log10(p.t))
  const ys = pts.map((p) => Math.log10(p.eps))
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)]
  const [y0, y1] = [Math.min(...ys), Math.max(...ys)]
  const W = 420
  const H = 220
  const sx = (x: number) => ((x - x0) / (x1 - x0 || 1)) * (W - 20) + 10
  const sy = (y: number) => H - 10 - ((y - y0) / (y1 - y0 || 1)) * (H - 20)
  const line = pts.map((p, i) => `${sx(xs[i]).toFixed(1)},${sy(ys[i]).toFixed(1)}`).join(' ')
  let markers = ''
  for (const round of view.rounds) {
    const mx = sx(Math.log10(round.time))
    const my = sy(Math.log10(round.eps))
    markers += `<circle cx="${mx.toFixed(1)}" cy="${my.toFixed(1)}" r="4" fill="#c0392b"/>`
  }
  svg.innerHTML =
    `<polyline points="${line}" fill="none" stroke="#2c3e50" stroke-width="1.5"/>` + markers
}

async function withErrors(action: () => Promise<void>) {
  clearError()
  setPending(true)
  try {
    await action()
  } catch (err) {
    if (err instanceof ApiError) {
      showError(err.body.message, err.body.field)
    } else {
      showError('network failure — the session is unchanged, retry when the server is back')
    }
  } finally {
    setPending(false)
  }
}

async function openSession() {
  await withErrors(async () => {
    const state = await api.openSession({
      mechanism: el<HTMLSelectElement>('mechanism').value as 'brownian' | 'laplace',
      task: el<HTMLSelectElement>('task').value as 'logistic' | 'ridge',
      checker: el<HTMLSelectElement>('checker').value as
        | 'public'
        | 'above_threshold'
        | 'reduced_above_threshold',
      seed: Number(el<HTMLInputElement>('seed').value) || 0,
    })
    view.applyOpen(state)
    // The boundary curve is fetched once per session and cached.
    const curve = await api.boundaryCurve(state.id)
    view.boundaryCurve = curve.points
  })
}

async function stepSession() {
  const eps = Number(el<HTMLInputElement>('eps-input').value)
  if (!view.canSubmit(eps) || view.sessionId === null) {
    showError(`ε must be at least the current value ${view.currentEps}`, 'target_eps')
    return
  }
  await withErrors(async () => {
    const round = await api.step(view.sessionId as string, eps)
    view.applyRound(round)
  })
}

async function stopSession() {
  if (view.sessionId === null) return
  await withErrors(async () => {
    view.applyStop(await api.stop(view.sessionId as string))
  })
}

export function mount() {
  el<HTMLButtonElement>('open-btn').addEventListener('click', () => void openSession())
  el<HTMLButtonElement>('step-btn').addEventListener('click', () => void stepSession())
  el<HTMLButtonElement>('stop-btn').addEventListener('click', () => void stopSession())
  el<HTMLInputElement>('eps-input').addEventListener('input', render)
  render()
}

if (typeof document !== 'undefined' && document.getElementById('open-btn')) {
  mount()
}
