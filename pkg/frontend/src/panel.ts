/**
 * Suggestion panel: the ranked top-k list for the selected line.
 *
 * Rendering preserves the API order exactly; every entry shows its rank
 * position and combined score, and the panel records the model generation
 * its content came from.
 */
import { Suggestion } from './types.js';

export interface PanelCallbacks {
  onAccept: (annotationId: string) => void;
  onCreate: (text: string) => void;
  onRetry: () => void;
}

export class SuggestionPanel {
  readonly root: HTMLElement;
  generation = -1;
  private list: HTMLOListElement;
  private notice: HTMLElement;
  private createInput: HTMLInputElement;

  constructor(container: HTMLElement, private callbacks: PanelCallbacks) {
    this.root = document.createElement('section');
    this.root.className = 'suggestion-panel';
    this.root.dataset.el = 'suggestion-panel';

    this.notice = document.createElement('p');
    this.notice.dataset.el = 'panel-notice';
    this.notice.hidden = true;
    this.root.appendChild(this.notice);

    this.list = document.createElement('ol');
    this.list.dataset.el = 'suggestion-list';
    this.root.appendChild(this.list);

    const form = document.createElement('form');
    form.dataset.el = 'create-form';
    this.createInput = document.createElement('input');
    this.createInput.type = 'text';
    this.createInput.placeholder = 'New annotation…';
    this.createInput.dataset.el = 'create-input';
    const submit = document.createElement('button');
    submit.type = 'submit';
    submit.textContent = 'Add';
    form.appendChild(this.createInput);
    form.appendChild(submit);
    form.addEventListener('submit', (event) => {
      event.preventDefault();
      const text = this.createInput.value.trim();
      if (text) {
        this.callbacks.onCreate(text);
        this.createInput.value = '';
      }
    });
    this.root.appendChild(form);
    container.appendChild(this.root);
  }

  /** Render suggestions in API order; the top entry is preselected. */
  showSuggestions(suggestions: Suggestion[], generation: number): void {
    this.generation = generation;
    this.notice.hidden = true;
    this.list.textContent = '';
    suggestions.forEach((suggestion, index) => {
      const item = document.createElement('li');
      item.dataset.el = 'suggestion';
      item.dataset.annotationId = suggestion.annotation_id;
      if (index === 0) {
        item.classList.add('selected');
      }
      const rank = document.createElement('span');
      rank.className = 'rank';
      rank.textContent = String(index + 1);
      const text = document.createElement('span');
      text.className = 'text';
      text.textContent = suggestion.text || suggestion.annotation_id;
      const score = document.createElement('span');
      score.className = 'score';
      score.textContent = suggestion.combined.toFixed(3);
      const accept = document.createElement('button');
      accept.type = 'button';
      accept.dataset.el = 'accept';
      accept.textContent = 'Accept';
      accept.addEventListener('click', () => this.callbacks.onAccept(suggestion.annotation_id));
      item.append(rank, text, score, accept);
      this.list.appendChild(item);
    });
  }

  /** The service's empty-context reason, rendered verbatim. */
  showReason(reason: string, generation: number): void {
    this.generation = generation;
    this.list.textContent = '';
    this.notice.textContent = reason;
    this.notice.hidden = false;
    this.notice.classList.remove('error');
  }

  /** Non-fatal network failure with a retry affordance. */
  showError(message: string): void {
    this.list.textContent = '';
    this.notice.textContent = '';
    this.notice.hidden = false;
    this.notice.classList.add('error');
    const label = document.createElement('span');
    label.textContent = message;
    const retry = document.createElement('button');
    retry.type = 'button';
    retry.dataset.el = 'retry';
    retry.textContent = 'Retry';
    retry.addEventListener('click', () => this.callbacks.onRetry());
    this.notice.append(label, retry);
  }

  clear(): void {
    this.list.textContent = '';
    this.notice.hidden = true;
  }
}
