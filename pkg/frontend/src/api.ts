/**
 * Thin client for the /v1 review-service API.
 *
 * The UI never computes scores or parses code; everything flows through
 * these calls. Base URL comes from the page config (window.REVIEW_API_BASE)
 * or falls back to same-origin.
 */
import {
  AnnotationInfo,
  ApiError,
  InstanceResponse,
  ProblemDetail,
  SourceResponse,
  SubmissionInfo,
  SuggestResponse,
} from './types.js';

declare global {
  interface Window {
    REVIEW_API_BASE?: string;
  }
}

export function apiBase(): string {
  if (typeof window !== 'undefined' && window.REVIEW_API_BASE) {
    return window.REVIEW_API_BASE.replace(/\/$/, '');
  }
  return '';
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(apiBase() + path, {
    headers: { 'Content-Type': 'application/json' },
    ...init,
  });
  if (!response.ok) {
    let problem: ProblemDetail;
    try {
      problem = (await response.json()) as ProblemDetail;
    } catch {
      problem = { status: response.status, code: 'http_error', message: response.statusText };
    }
    throw new ApiError(problem);
  }
  return (await response.json()) as T;
}

export class ApiClient {
  constructor(readonly sessionId: string) {}

  static async createSession(manifest: unknown): Promise<ApiClient> {
    const body = await request<{ session_id: string }>('/v1/sessions', {
      method: 'POST',
      body: JSON.stringify(manifest),
    });
    return new ApiClient(body.session_id);
  }

  listSubmissions(): Promise<SubmissionInfo[]> {
    return request(`/v1/sessions/${this.sessionId}/submissions`);
  }

  getSource(submissionId: string): Promise<SourceResponse> {
    return request(`/v1/sessions/${this.sessionId}/submissions/${submissionId}/source`);
  }

  suggest(submissionId: string, line: number, top = 5, signal?: AbortSignal): Promise<SuggestResponse> {
    const params = new URLSearchParams({ line: String(line), top: String(top) });
    return request(
      `/v1/sessions/${this.sessionId}/submissions/${submissionId}/suggest?${params}`,
      { signal },
    );
  }

  recordInstance(
    submissionId: string,
    line: number,
    choice: { annotation_id: string } | { text: string },
  ): Promise<InstanceResponse> {
    return request(`/v1/sessions/${this.sessionId}/submissions/${submissionId}/instances`, {
      method: 'POST',
      body: JSON.stringify({ line, ...choice }),
    });
  }

  rebuild(): Promise<{ generation: number }> {
    return request(`/v1/sessions/${this.sessionId}/rebuild`, { method: 'POST' });
  }

  listAnnotations(): Promise<AnnotationInfo[]> {
    return request(`/v1/sessions/${this.sessionId}/annotations`);
  }
}
