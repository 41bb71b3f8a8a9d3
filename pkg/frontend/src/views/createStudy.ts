// Create-study page: the form mirrors the server's study fields; server
// errors render inline next to the violating field, network failures keep
// the form state and show a retry banner.

import type { ApiClient } from '../api.js';
import { NetworkFailure } from '../api.js';
import { escapeHtml } from '../qr.js';
import type { ApiError, StudyDoc, StudyForm } from '../types.js';
import { isApiError } from '../types.js';
import { DEFAULT_CADENCE_S, SENSOR_CATALOG, validateStudyForm, type FieldErrors } from '../validation.js';

export interface SubmitOutcome {
  ok: boolean;
  study?: StudyDoc;
  fieldErrors?: FieldErrors;
  serverError?: ApiError;
  retry?: boolean; // network failure: keep state, offer retry
}

export async function submitStudyForm(api: ApiClient, form: StudyForm): Promise<SubmitOutcome> {
  const fieldErrors = validateStudyForm(form);
  if (Object.keys(fieldErrors).length > 0) {
    return { ok: false, fieldErrors };
  }
  let result: StudyDoc | ApiError;
  try {
    result = await api.createStudy(form);
  } catch (err) {
    if (err instanceof NetworkFailure) return { ok: false, retry: true };
    throw err;
  }
  if (isApiError(result)) {
    return { ok: false, fieldErrors: fieldErrorsFromServer(result), serverError: result };
  }
  return { ok: true, study: result };
}

// map server error codes onto the field that caused them
export function fieldErrorsFromServer(error: ApiError): FieldErrors {
  const detail = error.detail ?? '';
  if (error.error_code === 'DuplicateStudyId') return { study_id: 'a study with this id exists' };
  if (error.error_code === 'InvalidConfig') {
    if (detail.includes('duration')) return { duration_days: detail };
    if (detail.includes('subject')) return { n_subjects: detail };
    if (detail.includes('sensor')) return { sensors: detail };
    return { study_id: detail };
  }
  return { study_id: `${error.error_code}: ${detail}` };
}

export function renderStudyForm(form: StudyForm, errors: FieldErrors = {}, retry = false): string {
  const field = (name: keyof StudyForm & string, label: string, input: string) => `
    <div class="field${errors[name] ? ' invalid' : ''}">
      <label for="${name}">${label}</label>
      ${input}
      ${errors[name] ? `<span class="error">${escapeHtml(errors[name]!)}</span>` : ''}
    </div>`;

  const sensorRows = SENSOR_CATALOG.map((name) => {
    const chosen = form.sensors.find((s) => s.name === name);
    const freq = chosen?.frequency ?? DEFAULT_CADENCE_S[name] ?? 50;
    return `
      <tr>
        <td><input type="checkbox" name="sensor-${name}" ${chosen ? 'checked' : ''}></td>
        <td>${name}</td>
        <td><input type="number" name="freq-${name}" value="${freq}" step="any"></td>
      </tr>`;
  }).join('');

  return `
  <section class="create-study">
    <h2>Create new study</h2>
    ${retry ? '<div class="banner retry">Network problem - nothing was lost. <button id="retry">Retry</button></div>' : ''}
    <form id="study-form">
      ${field('study_id', 'Study id:', `<input name="study_id" value="${escapeHtml(form.study_id)}">`)}
      ${field('name', 'Study name:', `<input name="name" value="${escapeHtml(form.name)}">`)}
      ${field('duration_days', 'Study duration (days):', `<input type="number" name="duration_days" value="${form.duration_days}">`)}
      ${field('n_subjects', 'Number of subjects:', `<input type="number" name="n_subjects" value="${form.n_subjects}">`)}
      ${field('description', 'Study description:', `<textarea name="description">${escapeHtml(form.description)}</textarea>`)}
      <fieldset class="${errors.sensors ? 'invalid' : ''}">
        <legend>Sensors and recording frequency</legend>
        <table>${sensorRows}</table>
        ${errors.sensors ? `<span class="error">${escapeHtml(errors.sensors)}</span>` : ''}
      </fieldset>
      <button type="submit">Create study</button>
    </form>
  </section>`;
}

export function formFromInputs(inputs: Record<string, string | boolean>): StudyForm {
  const sensors = [];
  for (const name of SENSOR_CATALOG) {
    if (inputs[`sensor-${name}`] === true) {
      const raw = inputs[`freq-${name}`];
      const frequency = typeof raw === 'string' && raw !== '' ? Number(raw) : undefined;
      sensors.push(frequency === undefined ? { name } : { name, frequency });
    }
  }
  return {
    study_id: String(inputs.study_id ?? ''),
    name: String(inputs.name ?? ''),
    description: String(inputs.description ?? ''),
    duration_days: Number(inputs.duration_days ?? 0),
    n_subjects: Number(inputs.n_subjects ?? 0),
    sensors,
  };
}
