// Thin typed client over the service API. The student token travels only in
// headers, never in URLs; summaries and class views are used as-is with no
// client-side recomputation.

import type {
  ClassViewWire,
  ErrorWire,
  SessionListWire,
  Strategy,
  SummaryWire,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly errorCode: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
  }
}

async function asError(resp: Response): Promise<ApiError> {
  let code = "internal";
  let message = `${resp.status}`;
  try {
    const body = (await resp.json()) as ErrorWire;
    code = body.error_code ?? code;
    message = body.message ?? message;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(code, message, resp.status);
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: typeof fetch = fetch.bind(globalThis),
  ) {}

  private async request<T>(path: string, init: RequestInit = {}): Promise<T> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!resp.ok) throw await asError(resp);
    return (await resp.json()) as T;
  }

  listSessions(passcode: string): Promise<SessionListWire> {
    return this.request("/sessions", { headers: { "X-Passcode": passcode } });
  }

  getSummary(
    passcode: string,
    studentToken: string,
    session: string,
    strategy: Strategy,
  ): Promise<SummaryWire> {
    const params = new URLSearchParams({ session, strategy });
    return this.request(`/summary?${params}`, {
      headers: { "X-Passcode": passcode, "X-Student-Token": studentToken },
    });
  }

  getClassView(passcode: string, session: string): Promise<ClassViewWire> {
    const params = new URLSearchParams({ session });
    return this.request(`/class-view?${params}`, {
      headers: { "X-Passcode": passcode },
    });
  }

  logUsage(
    passcode: string,
    studentToken: string,
    session: string,
    startS: number,
    endS: number,
    strategy: string,
  ): Promise<{ event_id: number }> {
    return this.request("/usage", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        public_passcode: passcode,
        student_token: studentToken,
        session,
        start_s: startS,
        end_s: endS,
        strategy,
      }),
    });
  }
}
