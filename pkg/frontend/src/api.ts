// Thin typed client over fetch. The fetch function is injectable so tests
// can replay recorded responses without a server or a network.

import type {
  ApiError,
  NotifyResponse,
  OverviewDoc,
  QcTableDoc,
  StudyDoc,
  StudyForm,
  TokenDoc,
} from './types.js';

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class NetworkFailure extends Error {}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private adminKey: string,
    private fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T | ApiError> {
    let resp: Response;
    try {
      resp = await this.fetchFn(this.baseUrl + path, {
        method,
        headers: {
          'Content-Type': 'application/json',
          'X-Admin-Key': this.adminKey,
        },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new NetworkFailure(String(err));
    }
    return (await resp.json()) as T | ApiError;
  }

  createStudy(form: StudyForm) {
    return this.request<StudyDoc>('POST', '/v1/studies', form);
  }

  listStudies() {
    return this.request<StudyDoc[]>('GET', '/v1/studies');
  }

  overview(studyId: string) {
    return this.request<OverviewDoc>('GET', `/v1/studies/${studyId}/overview`);
  }

  tokens(studyId: string, subjectLabel: string, nCodes: number) {
    return this.request<TokenDoc[]>('POST', `/v1/studies/${studyId}/tokens`, {
      subject_label: subjectLabel,
      n_codes: nCodes,
    });
  }

  qcTable(studyId: string, now?: string) {
    const query = now ? `?now=${encodeURIComponent(now)}` : '';
    return this.request<QcTableDoc>('GET', `/v1/studies/${studyId}/qc${query}`);
  }

  notify(studyId: string, title: string, body: string, receiver: string | string[]) {
    return this.request<NotifyResponse>('POST', `/v1/studies/${studyId}/notify`, {
      title,
      body,
      receiver,
    });
  }

  closeStudy(studyId: string) {
    return this.request<Record<string, string>>('POST', `/v1/studies/${studyId}/close`);
  }
}
