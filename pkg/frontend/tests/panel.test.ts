import { beforeEach, describe, expect, it, vi } from 'vitest';

import { SuggestionPanel } from '../src/panel.js';
import { Suggestion } from '../src/types.js';

const SUGGESTIONS: Suggestion[] = [
  { annotation_id: 'a', text: 'first', combined: 0.9, pattern_score: 0.9, unique_fraction: 0.9 },
  { annotation_id: 'b', text: 'second', combined: 0.5, pattern_score: 0.5, unique_fraction: 0.5 },
  { annotation_id: 'c', text: 'third', combined: 0.1, pattern_score: 0.1, unique_fraction: 0.1 },
];

describe('SuggestionPanel', () => {
  let panel: SuggestionPanel;
  let accepted: string[];
  let created: string[];
  let retries: number;

  beforeEach(() => {
    document.body.innerHTML = '';
    accepted = [];
    created = [];
    retries = 0;
    panel = new SuggestionPanel(document.body, {
      onAccept: (id) => accepted.push(id),
      onCreate: (text) => created.push(text),
      onRetry: () => {
        retries += 1;
      },
    });
  });

  it('renders entries in API order with rank and score, top preselected', () => {
    panel.showSuggestions(SUGGESTIONS, 3);
    const items = [...document.querySelectorAll<HTMLElement>('[data-el="suggestion"]')];
    expect(items.map((i) => i.dataset.annotationId)).toEqual(['a', 'b', 'c']);
    expect(items.map((i) => i.querySelector('.rank')?.textContent)).toEqual(['1', '2', '3']);
    expect(items[0].classList.contains('selected')).toBe(true);
    expect(items[1].classList.contains('selected')).toBe(false);
    expect(items[0].querySelector('.score')?.textContent).toBe('0.900');
    expect(panel.generation).toBe(3);
  });

  it('accept buttons report the annotation id', () => {
    panel.showSuggestions(SUGGESTIONS, 1);
    const second = document.querySelectorAll<HTMLElement>('[data-el="accept"]')[1];
    second.click();
    expect(accepted).toEqual(['b']);
  });

  it('renders the empty-context reason verbatim', () => {
    panel.showReason('no context on this line', 2);
    const notice = document.querySelector<HTMLElement>('[data-el="panel-notice"]');
    expect(notice?.hidden).toBe(false);
    expect(notice?.textContent).toBe('no context on this line');
    expect(document.querySelectorAll('[data-el="suggestion"]')).toHaveLength(0);
  });

  it('shows network errors non-fatally with a retry affordance', () => {
    panel.showError('Could not fetch suggestions: boom');
    const retry = document.querySelector<HTMLElement>('[data-el="retry"]');
    expect(retry).not.toBeNull();
    retry?.click();
    expect(retries).toBe(1);
  });

  it('create form submits trimmed text', () => {
    panel.showSuggestions(SUGGESTIONS, 1);
    const input = document.querySelector<HTMLInputElement>('[data-el="create-input"]');
    const form = document.querySelector<HTMLFormElement>('[data-el="create-form"]');
    input!.value = '  watch the edge case  ';
    form!.dispatchEvent(new Event('submit'));
    expect(created).toEqual(['watch the edge case']);
  });
});
