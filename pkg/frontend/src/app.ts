// Browser bootstrap: login, hash routing, 10 s QC polling. All rendering
// goes through the pure view modules so it stays testable off-browser.

import { ApiClient, NetworkFailure } from './api.js';
import { qrSheet } from './qr.js';
import { isApiError, type StudyForm } from './types.js';
import { formFromInputs, renderStudyForm, submitStudyForm } from './views/createStudy.js';
import { renderNotifyForm, submitNotification } from './views/notify.js';
import { renderOverview, renderQcTable } from './views/studies.js';

const POLL_INTERVAL_MS = 10_000;

const emptyForm: StudyForm = {
  study_id: '',
  name: '',
  description: '',
  duration_days: 84,
  n_subjects: 10,
  sensors: [],
};

let api: ApiClient | null = null;
let pollTimer: number | undefined;
let pollGeneration = 0; // cancels superseded refreshes

function root(): HTMLElement {
  return document.getElementById('app')!;
}

function login() {
  root().innerHTML = `
    <section class="login">
      <h2>Dashboard login</h2>
      <form id="login-form">
        <label>Admin key: <input type="password" name="key"></label>
        <button type="submit">Log in</button>
      </form>
    </section>`;
  document.getElementById('login-form')!.addEventListener('submit', (ev) => {
    ev.preventDefault();
    const key = (document.querySelector('input[name=key]') as HTMLInputElement).value;
    api = new ApiClient('', key); // credential held in memory only
    window.location.hash = '#/studies';
    route();
  });
}

async function pageStudies() {
  stopPolling();
  const studies = await api!.listStudies();
  if (isApiError(studies)) {
    root().innerHTML = `<p class="error">${studies.error_code}: ${studies.detail}</p>`;
    return;
  }
  const items = studies
    .map((s) => `<li><a href="#/studies/${s.study_id}">${s.name}</a> (${s.state})</li>`)
    .join('');
  root().innerHTML = `
    <h2>Current studies</h2>
    <ul>${items || '<li>No studies yet.</li>'}</ul>
    <a href="#/create">Create study</a>`;
}

async function pageStudy(studyId: string) {
  stopPolling();
  const generation = ++pollGeneration;
  const [overview, qc] = await Promise.all([api!.overview(studyId), api!.qcTable(studyId)]);
  if (generation !== pollGeneration) return;
  if (isApiError(overview) || isApiError(qc)) {
    root().innerHTML = '<p class="error">Unknown study.</p>';
    return;
  }
  root().innerHTML = `
    ${renderOverview(overview)}
    <div id="qr-sheet-slot">
      <button id="load-qr">Show printable QR sheet</button>
    </div>
    <a href="#/studies/${studyId}/notify">Send push notification</a>
    <div id="qc-slot">${renderQcTable(qc)}</div>`;

  document.getElementById('load-qr')?.addEventListener('click', async () => {
    const tokens = await api!.tokens(studyId, `subject_${Date.now()}`, 4);
    if (isApiError(tokens)) return;
    document.getElementById('qr-sheet-slot')!.innerHTML =
      (await qrSheet(tokens)) + '<button onclick="window.print()">Print</button>';
  });

  pollTimer = window.setInterval(async () => {
    const mine = ++pollGeneration;
    const fresh = await api!.qcTable(studyId);
    if (mine !== pollGeneration || isApiError(fresh)) return;
    const slot = document.getElementById('qc-slot');
    if (slot) slot.innerHTML = renderQcTable(fresh);
  }, POLL_INTERVAL_MS);
}

function pageCreate(form: StudyForm = emptyForm, errors = {}, retry = false) {
  stopPolling();
  root().innerHTML = renderStudyForm(form, errors, retry);
  document.getElementById('study-form')!.addEventListener('submit', async (ev) => {
    ev.preventDefault();
    const inputs: Record<string, string | boolean> = {};
    for (const el of document.querySelectorAll<HTMLInputElement | HTMLTextAreaElement>(
      '#study-form input, #study-form textarea',
    )) {
      inputs[el.name] = el instanceof HTMLInputElement && el.type === 'checkbox' ? el.checked : el.value;
    }
    const submitted = formFromInputs(inputs);
    const outcome = await submitStudyForm(api!, submitted);
    if (outcome.ok) {
      window.location.hash = `#/studies/${outcome.study!.study_id}`;
      route();
    } else {
      pageCreate(submitted, outcome.fieldErrors ?? {}, outcome.retry ?? false);
    }
  });
}

function pageNotify(studyId: string, state = { title: '', body: '', receiver: 'ALL' }) {
  stopPolling();
  root().innerHTML = renderNotifyForm(state);
  document.getElementById('notify-form')!.addEventListener('submit', async (ev) => {
    ev.preventDefault();
    const value = (name: string) =>
      (document.querySelector(`#notify-form [name=${name}]`) as HTMLInputElement).value;
    const next = { title: value('title'), body: value('body'), receiver: value('receiver') };
    const outcome = await submitNotification(api!, studyId, next.title, next.body, next.receiver);
    pageNotify(studyId, { ...next, outcome } as never);
  });
}

function stopPolling() {
  if (pollTimer !== undefined) {
    clearInterval(pollTimer);
    pollTimer = undefined;
  }
  pollGeneration++;
}

function route() {
  if (!api) {
    login();
    return;
  }
  const hash = window.location.hash || '#/studies';
  const notify = hash.match(/^#\/studies\/([^/]+)\/notify$/);
  const study = hash.match(/^#\/studies\/([^/]+)$/);
  if (hash === '#/create') pageCreate();
  else if (notify) pageNotify(notify[1]);
  else if (study) pageStudy(study[1]);
  else pageStudies();
}

window.addEventListener('hashchange', route);
window.addEventListener('DOMContentLoaded', route);
