import { readFileSync } from 'node:fs';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';

import { ApiClient, type FetchLike } from '../src/api.js';

const here = dirname(fileURLToPath(import.meta.url));

export const fixture = JSON.parse(
  readFileSync(join(here, '..', 'fixtures', 'recorded_api.json'), 'utf-8'),
);

export interface RecordedCall {
  url: string;
  init?: RequestInit;
}

/** Fetch replaying recorded responses keyed by `${method} ${path}`. */
export function replayFetch(
  routes: Record<string, unknown>,
  calls: RecordedCall[] = [],
): FetchLike {
  return async (url, init) => {
    calls.push({ url, init });
    const key = `${init?.method ?? 'GET'} ${url.split('?')[0]}`;
    if (!(key in routes)) {
      throw new Error(`no recorded response for ${key}`);
    }
    return new Response(JSON.stringify(routes[key]), {
      status: 200,
      headers: { 'Content-Type': 'application/json' },
    });
  };
}

export function failingFetch(): FetchLike {
  return async () => {
    throw new TypeError('fetch failed');
  };
}

export function clientFor(routes: Record<string, unknown>, calls: RecordedCall[] = []) {
  return new ApiClient('', 'recorded-admin', replayFetch(routes, calls));
}
