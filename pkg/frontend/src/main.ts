/** Bootstrap: read the session id from the URL and mount the app. */
import { ApiClient } from './api.js';
import { ReviewApp } from './app.js';

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const sessionId = params.get('session');
  const mount = document.getElementById('app');
  if (!mount) {
    throw new Error('missing #app mount point');
  }
  if (!sessionId) {
    mount.textContent = 'Pass ?session=<id> in the URL (create one via POST /v1/sessions).';
    return;
  }
  const app = new ReviewApp(new ApiClient(sessionId), mount);
  await app.start();
}

void boot();
