/** Payload shapes of the /v1 review-service API. */

export interface SubmissionInfo {
  id: string;
  reviewed: boolean;
}

export interface SourceResponse {
  source: string;
  grammar: string;
}

export interface Suggestion {
  annotation_id: string;
  text: string;
  combined: number;
  pattern_score: number;
  unique_fraction: number;
}

export interface SuggestResponse {
  generation: number;
  suggestions: Suggestion[];
  reason?: string;
}

export interface AnnotationInfo {
  id: string;
  text: string;
}

export interface InstanceResponse {
  instance_id: string;
  annotation_id: string;
  context_extracted: boolean;
}

export interface ProblemDetail {
  status: number;
  code: string;
  message: string;
}

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;

  constructor(problem: ProblemDetail) {
    super(problem.message);
    this.status = problem.status;
    this.code = problem.code;
  }
}
