/**
 * Read-only code display with a clickable line gutter.
 *
 * Lines that already carry annotations get an inline marker. The view owns
 * no review logic: it only reports which 1-based line was selected.
 */

export class CodeView {
  readonly root: HTMLElement;
  private selected: number | null = null;
  private annotated = new Map<number, string[]>();

  constructor(container: HTMLElement, private onSelect: (line: number) => void) {
    this.root = document.createElement('div');
    this.root.className = 'code-view';
    this.root.dataset.el = 'code-view';
    container.appendChild(this.root);
  }

  get selectedLine(): number | null {
    return this.selected;
  }

  setSource(source: string): void {
    this.selected = null;
    this.annotated.clear();
    this.root.textContent = '';
    const lines = source.replace(/\n$/, '').split('\n');
    lines.forEach((text, index) => {
      const line = index + 1;
      const row = document.createElement('div');
      row.className = 'code-line';
      row.dataset.el = 'code-line';
      row.dataset.line = String(line);
      const gutter = document.createElement('span');
      gutter.className = 'gutter';
      gutter.dataset.el = 'gutter';
      gutter.textContent = String(line);
      gutter.addEventListener('click', () => this.select(line));
      const code = document.createElement('code');
      code.textContent = text;
      const marker = document.createElement('span');
      marker.className = 'annotations';
      marker.dataset.el = 'line-annotations';
      row.append(gutter, code, marker);
      this.root.appendChild(row);
    });
  }

  select(line: number): void {
    this.selected = line;
    for (const row of this.root.querySelectorAll<HTMLElement>('[data-el="code-line"]')) {
      row.classList.toggle('selected', row.dataset.line === String(line));
    }
    this.onSelect(line);
  }

  /** Show an accepted or created annotation inline on its line. */
  markAnnotated(line: number, label: string): void {
    const labels = this.annotated.get(line) ?? [];
    labels.push(label);
    this.annotated.set(line, labels);
    const row = this.root.querySelector<HTMLElement>(
      `[data-el="code-line"][data-line="${line}"] [data-el="line-annotations"]`,
    );
    if (row) {
      row.textContent = labels.join(' · ');
    }
  }

  unmarkLast(line: number): void {
    const labels = this.annotated.get(line) ?? [];
    labels.pop();
    this.annotated.set(line, labels);
    const row = this.root.querySelector<HTMLElement>(
      `[data-el="code-line"][data-line="${line}"] [data-el="line-annotations"]`,
    );
    if (row) {
      row.textContent = labels.join(' · ');
    }
  }
}
