// Current-studies page: overview counters, the downloadable/printable QR
// sheet, and the color-labeled participant QC table with its legend.

import { LEGEND, STATUS_CODE_LEGEND, colorForFlag, rowColor } from '../colors.js';
import { escapeHtml } from '../qr.js';
import type { OverviewDoc, QcRowDoc, QcTableDoc } from '../types.js';

export function renderOverview(doc: OverviewDoc): string {
  return `
  <section class="overview">
    <h2>${escapeHtml(doc.name)} <small>(${escapeHtml(doc.study_id)}, ${doc.state})</small></h2>
    <p>${escapeHtml(doc.description)}</p>
    <ul class="counters">
      <li>Study duration: <b>${doc.duration_days} days</b></li>
      <li>Total number of subjects: <b>${doc.total_subjects}</b></li>
      <li>Number of enrolled subjects: <b>${doc.enrolled_subjects}</b></li>
      <li>Number of new subjects: <b>${doc.new_subjects}</b></li>
      <li>Sensors: <b>${doc.sensors.map(escapeHtml).join(', ')}</b></li>
    </ul>
  </section>`;
}

const DATE_FMT = (iso: string | null) =>
  iso === null ? '' : iso.replace('T', ' ').replace(/\+00:00$/, '').replace(/\.\d+/, '');

export function renderQcTable(doc: QcTableDoc): string {
  const sensorNames = sensorColumns(doc.rows);
  const header =
    '<tr><th>user</th><th>id</th><th>device_id</th><th>date_registered</th>' +
    '<th>date_left_study</th><th>time_in_study</th><th>status_code</th>' +
    sensorNames.map((s) => `<th>${s}_n_batches</th><th>${s}_last_received</th>`).join('') +
    '</tr>';

  let lastSubject = '';
  const body = doc.rows
    .map((row) => {
      const subjectCell = row.subject_label === lastSubject ? '' : escapeHtml(row.subject_label);
      lastSubject = row.subject_label;
      const cells = sensorNames
        .map((s) => {
          const cell = row.sensors[s];
          if (!cell || !cell.chosen) {
            return `<td class="cell-grey" style="background:${colorForFlag('SENSOR_NOT_CHOSEN')}"></td><td class="cell-grey"></td>`;
          }
          return `<td>${cell.n_batches || ''}</td><td>${DATE_FMT(cell.last_received)}</td>`;
        })
        .join('');
      return (
        `<tr class="qc-row" style="background:${rowColor(row.flags)}" data-token="${escapeHtml(row.token_id)}">` +
        `<td>${subjectCell}</td><td>${escapeHtml(row.token_id)}</td>` +
        `<td>${escapeHtml(row.device_id)}</td><td>${DATE_FMT(row.date_registered)}</td>` +
        `<td>${DATE_FMT(row.date_left)}</td><td>${row.time_in_study_days} days</td>` +
        `<td class="status">${row.status_code ?? ''}</td>${cells}</tr>`
      );
    })
    .join('');

  return `
  <section class="qc">
    <h3>Quality control</h3>
    <table class="qc-table">${header}${body}</table>
    ${renderLegend()}
  </section>`;
}

export function renderLegend(): string {
  const colors = LEGEND.map(
    ([flag, text]) =>
      `<li><span class="swatch" style="background:${colorForFlag(flag)}"></span> ${text}</li>`,
  ).join('');
  const codes = STATUS_CODE_LEGEND.map(
    ([code, text]) => `<li><b>${code || 'Empty'}</b> - ${text}</li>`,
  ).join('');
  return `<div class="legend"><ul>${colors}</ul><ul>${codes}</ul></div>`;
}

function sensorColumns(rows: QcRowDoc[]): string[] {
  // chosen sensors first (stable order), then any cell that carries data
  const chosen = new Set<string>();
  const rest = new Set<string>();
  for (const row of rows) {
    for (const [name, cell] of Object.entries(row.sensors)) {
      if (cell.chosen) chosen.add(name);
      else if (cell.n_batches > 0) rest.add(name);
    }
  }
  return [...[...chosen].sort(), ...[...rest].sort()];
}
