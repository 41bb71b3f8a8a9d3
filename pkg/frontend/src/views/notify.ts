// Push-notification page: message title/text plus a receiver choice
// (everyone or listed subject numbers); reports how many deliveries the
// server queued.

import type { ApiClient } from '../api.js';
import { NetworkFailure } from '../api.js';
import { escapeHtml } from '../qr.js';
import type { ApiError, NotifyResponse } from '../types.js';
import { isApiError } from '../types.js';

export interface NotifyOutcome {
  ok: boolean;
  queued?: number;
  fieldErrors?: Partial<Record<'title' | 'body' | 'receiver', string>>;
  serverError?: ApiError;
  retry?: boolean;
}

export function parseReceiver(raw: string): string | string[] {
  const trimmed = raw.trim();
  if (trimmed === '' || trimmed.toUpperCase() === 'ALL') return 'ALL';
  return trimmed
    .split(/[\s,;]+/)
    .map((s) => s.trim())
    .filter((s) => s.length > 0);
}

export async function submitNotification(
  api: ApiClient,
  studyId: string,
  title: string,
  body: string,
  receiverRaw: string,
): Promise<NotifyOutcome> {
  const fieldErrors: NotifyOutcome['fieldErrors'] = {};
  if (!title.trim()) fieldErrors.title = 'message title is required';
  if (!body.trim()) fieldErrors.body = 'message text is required';
  if (Object.keys(fieldErrors).length > 0) return { ok: false, fieldErrors };

  let result: NotifyResponse | ApiError;
  try {
    result = await api.notify(studyId, title, body, parseReceiver(receiverRaw));
  } catch (err) {
    if (err instanceof NetworkFailure) return { ok: false, retry: true };
    throw err;
  }
  if (isApiError(result)) return { ok: false, serverError: result };
  return { ok: true, queued: result.queued_deliveries };
}

export function renderNotifyForm(state: {
  title: string;
  body: string;
  receiver: string;
  outcome?: NotifyOutcome;
}): string {
  const { outcome } = state;
  const banner = !outcome
    ? ''
    : outcome.ok
      ? `<div class="banner ok">Queued for ${outcome.queued} registration${outcome.queued === 1 ? '' : 's'}.</div>`
      : outcome.retry
        ? '<div class="banner retry">Network problem - message not sent. <button id="retry">Retry</button></div>'
        : outcome.serverError
          ? `<div class="banner error">${escapeHtml(outcome.serverError.error_code)}: ${escapeHtml(outcome.serverError.detail)}</div>`
          : '';
  const err = (k: 'title' | 'body') =>
    outcome?.fieldErrors?.[k] ? `<span class="error">${escapeHtml(outcome.fieldErrors[k]!)}</span>` : '';
  return `
  <section class="notify">
    <h2>Push notifications</h2>
    ${banner}
    <form id="notify-form">
      <div class="field">
        <label>Message title:</label>
        <input name="title" value="${escapeHtml(state.title)}">${err('title')}
      </div>
      <div class="field">
        <label>Message text:</label>
        <textarea name="body">${escapeHtml(state.body)}</textarea>${err('body')}
      </div>
      <div class="field">
        <label>Receiver (ALL or subject numbers):</label>
        <input name="receiver" value="${escapeHtml(state.receiver)}">
      </div>
      <button type="submit">Send</button>
    </form>
  </section>`;
}
