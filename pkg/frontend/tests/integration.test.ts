// End-to-end check against a live local server: the rendered ledger must
// match the server transcript, the epsilon control must reject decreases,
// and a threshold halt must display the server's doubled epsilon.

import { spawn, type ChildProcess } from 'node:child_process'
import { afterAll, beforeAll, describe, expect, it } from 'vitest'

import { ApiError, SessionApi } from '../src/api'
import { SessionView } from '../src/state'

const PORT = 8971
const BASE = `http://127.0.0.1:${PORT}`

let server: ChildProcess

async function waitForServer(timeoutMs = 30000): Promise<void> {
  const deadline = Date.now() + timeoutMs
  while (Date.now() < deadline) {
    try {
      const r = await fetch(`${BASE}/sessions/nope`)
      if (r.status === 404) return
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 200))
  }
  throw new Error('server did not come up')
}

beforeAll(async () => {
  server = spawn(
    'python3',
    ['-m', 'gradual_release.cli', 'serve', '--port', String(PORT)],
    { stdio: 'ignore' },
  )
  await waitForServer()
}, 40000)

afterAll(() => {
  server.kill()
})

describe('console against a live server', () => {
  it('open/step/stop round-trip renders a ledger identical to the transcript', async () => {
    const api = new SessionApi(BASE)
    const view = new SessionView()
    view.applyOpen(
      await api.openSession({
        mechanism: 'brownian',
        task: 'logistic',
        n: 300,
        d: 4,
        checker: 'public',
        seed: 7,
      }),
    )
    expect(view.status).toBe('open')
    expect(view.ledger()).toEqual([])

    const curve = await api.boundaryCurve(view.sessionId as string, 0.1, 10, 20)
    view.boundaryCurve = curve.points
    expect(curve.points).toHaveLength(20)
    expect(curve.points.every((p) => p.eps > 0)).toBe(true)

    for (const eps of [0.1, 0.2, 0.4]) {
      view.applyRound(await api.step(view.sessionId as string, eps))
    }
    const serverState = await api.getState(view.sessionId as string)
    expect(view.matchesTranscript(serverState)).toBe(true)
    expect(view.ledger().map((r) => r.n)).toEqual([1, 2, 3])

    view.applyStop(await api.stop(view.sessionId as string))
    expect(view.status).toBe('stopped')
    expect(view.stop).toEqual({ N: 3, reason: 'analyst-stop' })
  })

  it('rejects decreasing epsilon on both the client and the server', async () => {
    const api = new SessionApi(BASE)
    const view = new SessionView()
    view.applyOpen(
      await api.openSession({
        mechanism: 'brownian',
        task: 'logistic',
        n: 300,
        d: 4,
        seed: 8,
      }),
    )
    view.applyRound(await api.step(view.sessionId as string, 0.5))
    expect(view.canSubmit(0.4)).toBe(false)
    // Bypassing the guard still gets a 409 from the server.
    try {
      await api.step(view.sessionId as string, 0.4)
      expect.unreachable('server accepted a decreasing epsilon')
    } catch (err) {
      expect(err).toBeInstanceOf(ApiError)
      expect((err as ApiError).status).toBe(409)
      expect((err as ApiError).body.code).toBe('monotonicity')
    }
  })

  it('displays the server total epsilon (twice the halting eps) on a RAT halt', async () => {
    const api = new SessionApi(BASE)
    const view = new SessionView()
    view.applyOpen(
      await api.openSession({
        mechanism: 'brownian',
        task: 'logistic',
        n: 300,
        d: 4,
        checker: 'reduced_above_threshold',
        seed: 9,
      }),
    )
    let eps = 0.05
    let halted = null
    for (let i = 0; i < 40 && halted === null; i++) {
      const round = await api.step(view.sessionId as string, eps)
      view.applyRound(round)
      if (round.rat_bit === 1) halted = round
      eps *= 1.25
    }
    expect(halted).not.toBeNull()
    expect(view.status).toBe('halted')
    const total = halted!.total_eps as number
    expect(total).toBeCloseTo(halted!.eps + halted!.requested_eps, 9)
    expect(total).toBeCloseTo(2 * halted!.requested_eps, 6)
    expect(view.badge).toBe(`target met, total ε = ${total}`)
    const serverState = await api.getState(view.sessionId as string)
    expect(view.matchesTranscript(serverState)).toBe(true)
    expect(serverState.status).toBe('halted')
  })

  it('surfaces field-level config errors', async () => {
    const api = new SessionApi(BASE)
    try {
      await api.openSession({
        mechanism: 'brownian',
        boundary: { kind: 'linear', delta: 0.05 },
      })
      expect.unreachable('server accepted a boundary without sensitivity')
    } catch (err) {
      expect(err).toBeInstanceOf(ApiError)
      expect((err as ApiError).body.field).toBe('boundary.sensitivity')
    }
  })
})
