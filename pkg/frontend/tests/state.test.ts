import { describe, expect, it } from 'vitest'

import type { RoundRecord, SessionState } from '../src/api'
import { SessionView } from '../src/state'

function openState(overrides: Partial<SessionState> = {}): SessionState {
  return {
    id: 'abc',
    mechanism: 'brownian',
    checker: 'public',
    status: 'open',
    rounds: [],
    boundary: null,
    stop: null,
    ...overrides,
  }
}

function round(n: number, eps: number, extra: Partial<RoundRecord> = {}): RoundRecord {
  return {
    n,
    requested_eps: eps,
    eps,
    delta: 0.05,
    time: 1 / eps,
    status: 'open',
    loss: 0.5,
    ...extra,
  }
}

describe('SessionView', () => {
  it('starts idle with an empty ledger', () => {
    const view = new SessionView()
    expect(view.status).toBe('idle')
    expect(view.ledger()).toEqual([])
    expect(view.canSubmit(0.1)).toBe(false)
  })

  it('mirrors the server transcript order exactly', () => {
    const view = new SessionView()
    view.applyOpen(openState())
    view.applyRound(round(1, 0.1))
    view.applyRound(round(2, 0.2))
    const ledger = view.ledger()
    expect(ledger.map((r) => r.n)).toEqual([1, 2])
    expect(ledger[0].eps).toBe(0.1)
    expect(
      view.matchesTranscript(openState({ rounds: [round(1, 0.1), round(2, 0.2)] })),
    ).toBe(true)
    expect(view.matchesTranscript(openState({ rounds: [round(1, 0.1)] }))).toBe(false)
  })

  it('rejects decreasing epsilon at the control', () => {
    const view = new SessionView()
    view.applyOpen(openState())
    view.applyRound(round(1, 0.3))
    expect(view.canSubmit(0.2)).toBe(false)
    expect(view.canSubmit(0.3)).toBe(true)
    expect(view.canSubmit(0.5)).toBe(true)
    expect(view.canSubmit(Number.NaN)).toBe(false)
    expect(view.canSubmit(-1)).toBe(false)
  })

  it('treats an equal-eps replay as a no-op', () => {
    const view = new SessionView()
    view.applyOpen(openState())
    const r = round(1, 0.3)
    view.applyRound(r)
    view.applyRound({ ...r })
    expect(view.rounds).toHaveLength(1)
  })

  it('shows the server halt badge without recomputing it', () => {
    const view = new SessionView()
    view.applyOpen(openState({ checker: 'reduced_above_threshold' }))
    view.applyRound(round(1, 0.3, { rat_bit: 0, loss: undefined }))
    expect(view.badge).toBeNull()
    view.applyRound(round(2, 0.4, { rat_bit: 1, total_eps: 0.8, status: 'halted', loss: undefined }))
    expect(view.status).toBe('halted')
    expect(view.badge).toBe('target met, total ε = 0.8')
    expect(view.canSubmit(0.5)).toBe(false)
  })

  it('disables submission while a request is pending or after stop', () => {
    const view = new SessionView()
    view.applyOpen(openState())
    view.pending = true
    expect(view.canSubmit(0.5)).toBe(false)
    view.pending = false
    view.applyStop(openState({ status: 'stopped', stop: { N: 0, reason: 'analyst-stop' } }))
    expect(view.status).toBe('stopped')
    expect(view.canSubmit(0.5)).toBe(false)
  })
})
