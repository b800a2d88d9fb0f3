/** Stale-generation banner and transient error toasts. */

export class StaleBanner {
  readonly root: HTMLElement;

  constructor(container: HTMLElement, onRefresh: () => void) {
    this.root = document.createElement('div');
    this.root.className = 'stale-banner';
    this.root.dataset.el = 'stale-banner';
    this.root.hidden = true;
    const label = document.createElement('span');
    label.textContent = 'The model was rebuilt since these suggestions were fetched.';
    const refresh = document.createElement('button');
    refresh.type = 'button';
    refresh.dataset.el = 'refresh';
    refresh.textContent = 'Refresh';
    refresh.addEventListener('click', onRefresh);
    this.root.append(label, refresh);
    container.appendChild(this.root);
  }

  show(): void {
    this.root.hidden = false;
  }

  hide(): void {
    this.root.hidden = true;
  }

  get visible(): boolean {
    return !this.root.hidden;
  }
}

export function showToast(container: HTMLElement, message: string): HTMLElement {
  const toast = document.createElement('div');
  toast.className = 'toast';
  toast.dataset.el = 'toast';
  toast.textContent = message;
  container.appendChild(toast);
  setTimeout(() => toast.remove(), 4000);
  return toast;
}
