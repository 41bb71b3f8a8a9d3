import { describe, expect, it } from 'vitest';

import { ApiClient, NetworkFailure } from '../src/api.js';
import type { StudyForm } from '../src/types.js';
import {
  fieldErrorsFromServer,
  formFromInputs,
  renderStudyForm,
  submitStudyForm,
} from '../src/views/createStudy.js';
import { clientFor, failingFetch, fixture, type RecordedCall } from './helpers.js';

const ppdForm: StudyForm = fixture.create_study.request;

describe('create-study page', () => {
  it('round-trips the recorded PPD config', async () => {
    const calls: RecordedCall[] = [];
    const api = clientFor({ 'POST /v1/studies': fixture.create_study.response }, calls);
    const outcome = await submitStudyForm(api, ppdForm);

    expect(outcome.ok).toBe(true);
    expect(outcome.study!.duration_days).toBe(84);
    expect(outcome.study!.n_subjects).toBe(60);
    expect(outcome.study!.sensors.map((s) => s.name)).toEqual([
      'activity',
      'application_usage',
      'location',
    ]);
    // the wire request is exactly the recorded one
    expect(JSON.parse(String(calls[0].init!.body))).toEqual(ppdForm);
    expect(calls[0].url).toBe('/v1/studies');
  });

  it('blocks duration 0 client-side with an inline error', async () => {
    const api = clientFor({}); // any request would throw: none must happen
    const outcome = await submitStudyForm(api, { ...ppdForm, duration_days: 0 });
    expect(outcome.ok).toBe(false);
    expect(outcome.fieldErrors!.duration_days).toMatch(/at least 1/);

    const html = renderStudyForm({ ...ppdForm, duration_days: 0 }, outcome.fieldErrors!);
    expect(html).toContain('class="field invalid"');
    expect(html).toMatch(/duration_days[\s\S]*?at least 1/);
  });

  it('renders server-side errors next to the violating field', async () => {
    const api = clientFor({ 'POST /v1/studies': fixture.errors.duration_zero });
    const outcome = await submitStudyForm(api, { ...ppdForm, duration_days: 10 });
    expect(outcome.ok).toBe(false);
    expect(outcome.serverError!.error_code).toBe('InvalidConfig');
    expect(outcome.fieldErrors!.duration_days).toBeDefined();
  });

  it('maps duplicate-study conflicts onto the id field', () => {
    const errors = fieldErrorsFromServer(fixture.errors.duplicate_study);
    expect(errors.study_id).toMatch(/exists/);
  });

  it('keeps form state and offers retry on network failure', async () => {
    const api = new ApiClient('', 'k', failingFetch());
    const outcome = await submitStudyForm(api, ppdForm);
    expect(outcome.ok).toBe(false);
    expect(outcome.retry).toBe(true);

    const html = renderStudyForm(ppdForm, {}, true);
    expect(html).toContain('Retry');
    expect(html).toContain(ppdForm.name); // nothing lost
  });

  it('collects checked sensors with their frequencies from inputs', () => {
    const form = formFromInputs({
      study_id: 'ppd_followup',
      name: 'PPD',
      description: '',
      duration_days: '84',
      n_subjects: '60',
      'sensor-activity': true,
      'freq-activity': '300',
      'sensor-location': true,
      'freq-location': '600',
      'sensor-accelerometer': false,
      'freq-accelerometer': '50',
    });
    expect(form.duration_days).toBe(84);
    // catalog order: location precedes activity
    expect(form.sensors).toEqual([
      { name: 'location', frequency: 600 },
      { name: 'activity', frequency: 300 },
    ]);
  });

  it('network failure rejects with NetworkFailure only', async () => {
    const api = new ApiClient('', 'k', failingFetch());
    await expect(api.listStudies()).rejects.toBeInstanceOf(NetworkFailure);
  });
});
