// Client-side view of one session.
//
/// The view mirrors the server transcript exactly: rounds are appended in
// server order, receipts are never recomputed or mutated locally, and the
// halt badge quotes the server's total epsilon. The only client-side logic
// is the monotone epsilon guard on the control, which prevents the UI from
// even submitting a decreasing request.

import type { BoundaryPoint, RoundRecord, SessionState, StopRecord } from './api'

export interface LedgerRow {
  n: number
  eps: number
  delta: number
  time: number
  loss: number | null
  bit: number | null
  noop: boolean
}

export type SessionStatus = 'idle' | 'open' | 'halted' | 'stopped'

export class SessionView {
  sessionId: string | null = null
  mechanism = ''
  checker = ''
  status: SessionStatus = 'idle'
  rounds: RoundRecord[] = []
  boundaryCurve: BoundaryPoint[] = []
  stop: StopRecord | null = null
  badge: string | null = null
  pending = false

  get currentEps(): number {
    const last = this.rounds[this.rounds.length - 1]
    return last ? last.requested_eps : 0
  }

  /** The UI cannot submit a decreasing epsilon. */
  canSubmit(eps: number): boolean {
    return (
      this.status === 'open' &&
      !this.pending &&
      Number.isFinite(eps) &&
      eps > 0 &&
      eps >= this.currentEps
    )
  }

  applyOpen(state: SessionState): void {
    this.sessionId = state.id
    this.mechanism = state.mechanism
    this.checker = state.checker
    this.status = state.status
    this.rounds = [...state.rounds]
    this.stop = state.stop
    this.badge = null
  }

  applyRound(round: RoundRecord): void {
    const last = this.rounds[this.rounds.length - 1]
    if (last && last.n === round.n) {
      // Idempotent equal-eps step: the server replayed the cached round.
      return
    }
    this.rounds.push(round)
    if (round.rat_bit === 1 && round.total_eps !== undefined) {
      this.status = 'halted'
      this.badge = `target met, total ε = ${round.total_eps}`
    }
  }

  applyStop(state: SessionState): void {
    this.status = state.status
    this.stop = state.stop
  }

  /** Rows rendered by the ledger table, in server transcript order. */
  ledger(): LedgerRow[] {
    return this.rounds.map((r) => ({
      n: r.n,
      eps: r.eps,
      delta: r.delta,
      time: r.time,
      loss: r.loss ?? null,
      bit: r.rat_bit ?? null,
      noop: false,
    }))
  }

  /** Equality check against a server state snapshot (used by tests and refresh). */
  matchesTranscript(state: SessionState): boolean {
    if (state.rounds.length !== this.rounds.length) return false
    return state.rounds.every((r, i) => {
      const mine = this.rounds[i]
      return (
        mine.n === r.n &&
        mine.eps === r.eps &&
        mine.delta === r.delta &&
        mine.time === r.time &&
        mine.loss === r.loss &&
        mine.rat_bit === r.rat_bit &&
        mine.total_eps === r.total_eps
      )
    })
  }
}
