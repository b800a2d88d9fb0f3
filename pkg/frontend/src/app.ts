/**
 * Review app controller: one session, one submission on screen, a
 * suggestion panel for the selected line.
 *
 * All intelligence lives behind the /v1 API; this file only coordinates
 * fetches, optimistic updates, and rendering. At most one suggest request
 * is in flight per selected line (latest wins, earlier ones aborted).
 */
import { ApiClient } from './api.js';
import { StaleBanner, showToast } from './banner.js';
import { CodeView } from './codeview.js';
import { SuggestionPanel } from './panel.js';
import { AnnotationInfo, ApiError, SubmissionInfo } from './types.js';

export class ReviewApp {
  readonly codeView: CodeView;
  readonly panel: SuggestionPanel;
  readonly banner: StaleBanner;
  submissions: SubmissionInfo[] = [];
  annotations = new Map<string, AnnotationInfo>();
  activeIndex = 0;
  lastSeenGeneration = 0;

  private progress: HTMLElement;
  private title: HTMLElement;
  private inflight: AbortController | null = null;
  private requestToken = 0;
  private lastFetch: Promise<void> = Promise.resolve();

  constructor(readonly api: ApiClient, readonly root: HTMLElement) {
    this.title = document.createElement('h2');
    this.title.dataset.el = 'submission-title';
    root.appendChild(this.title);
    this.progress = document.createElement('div');
    this.progress.dataset.el = 'progress';
    root.appendChild(this.progress);
    this.banner = new StaleBanner(root, () => this.refreshSuggestions());
    this.codeView = new CodeView(root, (line) => {
      this.lastFetch = this.fetchSuggestions(line);
    });
    this.panel = new SuggestionPanel(root, {
      onAccept: (annotationId) => void this.acceptSuggestion(annotationId),
      onCreate: (text) => void this.createAnnotation(text),
      onRetry: () => this.refreshSuggestions(),
    });
    root.addEventListener('keydown', (event) => {
      const key = (event as KeyboardEvent).key;
      if (key === 'n') {
        void this.nextSubmission();
      } else if (key === 'p') {
        void this.previousSubmission();
      }
    });
  }

  async start(): Promise<void> {
    this.submissions = await this.api.listSubmissions();
    const library = await this.api.listAnnotations();
    this.annotations = new Map(library.map((a) => [a.id, a]));
    const firstUnreviewed = this.submissions.findIndex((s) => !s.reviewed);
    this.activeIndex = firstUnreviewed === -1 ? 0 : firstUnreviewed;
    await this.showSubmission(this.activeIndex);
  }

  get activeSubmission(): SubmissionInfo {
    return this.submissions[this.activeIndex];
  }

  async showSubmission(index: number): Promise<void> {
    this.activeIndex = index;
    const submission = this.submissions[index];
    const body = await this.api.getSource(submission.id);
    this.codeView.setSource(body.source);
    this.panel.clear();
    this.banner.hide();
    this.title.textContent = submission.id;
    this.renderProgress();
  }

  renderProgress(): void {
    const reviewed = this.submissions.filter((s) => s.reviewed).length;
    this.progress.textContent = `${reviewed}/${this.submissions.length} reviewed`;
  }

  /** Every response carrying a model generation funnels through here. */
  noteGeneration(generation: number): void {
    if (generation > this.lastSeenGeneration) {
      this.lastSeenGeneration = generation;
    }
    if (this.panel.generation >= 0 && generation > this.panel.generation) {
      this.banner.show();
    }
  }

  /** Programmatic path of a gutter click; resolves when the fetch settles. */
  selectLine(line: number): Promise<void> {
    this.codeView.select(line);
    return this.lastFetch;
  }

  private async fetchSuggestions(line: number): Promise<void> {
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    const token = ++this.requestToken;
    try {
      const body = await this.api.suggest(this.activeSubmission.id, line, 5, controller.signal);
      if (token !== this.requestToken) {
        return; // a later selection superseded this response
      }
      if (body.reason !== undefined && body.suggestions.length === 0) {
        this.panel.showReason(body.reason, body.generation);
      } else {
        this.panel.showSuggestions(body.suggestions, body.generation);
      }
      this.banner.hide();
      this.noteGeneration(body.generation);
    } catch (error) {
      if (token !== this.requestToken || (error as Error).name === 'AbortError') {
        return;
      }
      this.panel.showError(`Could not fetch suggestions: ${(error as Error).message}`);
    }
  }

  refreshSuggestions(): void {
    const line = this.codeView.selectedLine;
    if (line !== null) {
      this.lastFetch = this.fetchSuggestions(line);
    }
  }

  async acceptSuggestion(annotationId: string): Promise<void> {
    const line = this.codeView.selectedLine;
    if (line === null) {
      return;
    }
    const label = this.annotations.get(annotationId)?.text || annotationId;
    this.codeView.markAnnotated(line, label);
    const wasReviewed = this.activeSubmission.reviewed;
    this.activeSubmission.reviewed = true;
    this.renderProgress();
    try {
      await this.api.recordInstance(this.activeSubmission.id, line, {
        annotation_id: annotationId,
      });
    } catch (error) {
      this.codeView.unmarkLast(line);
      this.activeSubmission.reviewed = wasReviewed;
      this.renderProgress();
      showToast(this.root, (error as Error).message);
    }
  }

  async createAnnotation(text: string): Promise<void> {
    const line = this.codeView.selectedLine;
    if (line === null) {
      return;
    }
    this.codeView.markAnnotated(line, text);
    const wasReviewed = this.activeSubmission.reviewed;
    this.activeSubmission.reviewed = true;
    this.renderProgress();
    try {
      const body = await this.api.recordInstance(this.activeSubmission.id, line, { text });
      this.annotations.set(body.annotation_id, { id: body.annotation_id, text });
    } catch (error) {
      this.codeView.unmarkLast(line);
      this.activeSubmission.reviewed = wasReviewed;
      this.renderProgress();
      showToast(this.root, (error as Error).message);
    }
  }

  /** Moving on counts as completing the review: trigger a rebuild. */
  async nextSubmission(): Promise<void> {
    try {
      const body = await this.api.rebuild();
      this.noteGeneration(body.generation);
    } catch (error) {
      showToast(this.root, (error as Error).message);
      if (error instanceof ApiError && error.status >= 500) {
        return;
      }
    }
    if (this.activeIndex + 1 < this.submissions.length) {
      await this.showSubmission(this.activeIndex + 1);
    }
  }

  async previousSubmission(): Promise<void> {
    if (this.activeIndex > 0) {
      await this.showSubmission(this.activeIndex - 1);
    }
  }
}
