// Typed client for the gradual-release session service.
//
// The console talks only to this HTTP API; every number it shows comes
// from a server response verbatim.

export interface OpenRequest {
  mechanism: 'brownian' | 'laplace'
  task?: 'logistic' | 'ridge'
  n?: number
  d?: number
  checker?: 'public' | 'above_threshold' | 'reduced_above_threshold'
  seed?: number
  boundary?: Record<string, unknown>
  budget?: { l1?: number; l2?: number }
  dim?: number
  eps_max?: number
  tune_target?: number
}

export interface RoundRecord {
  n: number
  requested_eps: number
  eps: number
  delta: number
  time: number
  status: string
  loss?: number
  rat_bit?: number
  total_eps?: number
}

export interface StopRecord {
  N: number
  reason: string
}

export interface SessionState {
  id: string
  mechanism: string
  checker: string
  status: 'open' | 'halted' | 'stopped'
  rounds: RoundRecord[]
  boundary: Record<string, unknown> | null
  stop: StopRecord | null
}

export interface BoundaryPoint {
  t: number
  eps: number
}

export interface ApiErrorBody {
  code: string
  message: string
  field?: string
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: ApiErrorBody,
  ) {
    super(body.message)
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, {
    headers: { 'Content-Type': 'application/json' },
    ...init,
  })
  if (!response.ok) {
    const body = (await response.json()) as ApiErrorBody
    throw new ApiError(response.status, body)
  }
  return response.json() as Promise<T>
}

export class SessionApi {
  constructor(readonly baseUrl: string = '') {}

  openSession(config: OpenRequest): Promise<SessionState> {
    return request(`${this.baseUrl}/sessions`, {
      method: 'POST',
      body: JSON.stringify(config),
    })
  }

  step(sessionId: string, targetEps: number): Promise<RoundRecord> {
    return request(`${this.baseUrl}/sessions/${sessionId}/step`, {
      method: 'POST',
      body: JSON.stringify({ target_eps: targetEps }),
    })
  }

  getState(sessionId: string): Promise<SessionState> {
    return request(`${this.baseUrl}/sessions/${sessionId}`)
  }

  stop(sessionId: string): Promise<SessionState> {
    return request(`${this.baseUrl}/sessions/${sessionId}/stop`, { method: 'POST' })
  }

  boundaryCurve(
    sessionId: string,
    tmin = 0.01,
    tmax = 100,
    points = 100,
  ): Promise<{ points: BoundaryPoint[] }> {
    const params = new URLSearchParams({
      tmin: String(tmin),
      tmax: String(tmax),
      points: String(points),
    })
    return request(`${this.baseUrl}/sessions/${sessionId}/boundary?${params}`)
  }
}
