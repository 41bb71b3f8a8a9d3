// Client-side form validation mirroring the server's StudyConfig
// invariants: same sensor catalog, same bounds. The server remains the
// authority; this only catches mistakes before a round trip.

import type { StudyForm } from './types.js';

export const IMU_SENSORS = [
  'accelerometer',
  'gyroscope',
  'gravity_sensor',
  'linear_acceleration',
] as const;

export const SENSOR_CATALOG = [
  ...IMU_SENSORS,
  'location',
  'activity',
  'application_usage',
] as const;

export const DEFAULT_CADENCE_S: Record<string, number> = {
  location: 600,
  activity: 300,
  application_usage: 86400,
};

export type FieldErrors = Partial<Record<string, string>>;

export function validateStudyForm(form: StudyForm): FieldErrors {
  const errors: FieldErrors = {};
  if (!form.study_id.trim()) errors.study_id = 'study id is required';
  if (!form.name.trim()) errors.name = 'study name is required';
  if (!Number.isInteger(form.duration_days) || form.duration_days < 1)
    errors.duration_days = 'duration must be a whole number of days, at least 1';
  if (!Number.isInteger(form.n_subjects) || form.n_subjects < 1)
    errors.n_subjects = 'number of subjects must be at least 1';
  if (form.sensors.length === 0) errors.sensors = 'choose at least one sensor';

  const seen = new Set<string>();
  for (const sensor of form.sensors) {
    if (!(SENSOR_CATALOG as readonly string[]).includes(sensor.name)) {
      errors.sensors = `unknown sensor: ${sensor.name}`;
      break;
    }
    if (seen.has(sensor.name)) {
      errors.sensors = `duplicate sensor: ${sensor.name}`;
      break;
    }
    seen.add(sensor.name);
    const freq = sensor.frequency;
    if (freq !== undefined) {
      if (freq <= 0) {
        errors.sensors = `${sensor.name}: frequency must be positive`;
        break;
      }
      if ((IMU_SENSORS as readonly string[]).includes(sensor.name) && (freq < 1 || freq > 200)) {
        errors.sensors = `${sensor.name}: rate must be within 1..200 Hz`;
        break;
      }
      if (sensor.name === 'application_usage' && freq !== 86400) {
        errors.sensors = 'application_usage cadence is fixed at 86400 s';
        break;
      }
      if ((sensor.name === 'location' || sensor.name === 'activity') && freq < 60) {
        errors.sensors = `${sensor.name}: cadence must be at least 60 s`;
        break;
      }
    }
  }
  return errors;
}
