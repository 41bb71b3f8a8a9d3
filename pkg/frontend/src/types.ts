// Documents exchanged with the /v1 API. Field names mirror the server
// exactly; the dashboard never reshapes them beyond presentation.

export interface SensorSpecDoc {
  name: string;
  frequency?: number;
}

export interface StudyForm {
  study_id: string;
  name: string;
  description: string;
  duration_days: number;
  n_subjects: number;
  sensors: SensorSpecDoc[];
}

export interface StudyDoc extends StudyForm {
  created_at: string | null;
  state: 'OPEN' | 'CLOSED';
}

export interface OverviewDoc {
  study_id: string;
  name: string;
  description: string;
  state: string;
  duration_days: number;
  total_subjects: number;
  enrolled_subjects: number;
  new_subjects: number;
  sensors: string[];
}

export interface TokenDoc {
  subject_label: string;
  token_id: string;
  study_id: string;
  server: string;
  qr_payload: string;
}

export interface SensorCellDoc {
  n_batches: number;
  last_received: string | null;
  chosen: boolean;
}

export interface QcRowDoc {
  subject_label: string;
  token_id: string;
  device_id: string;
  date_registered: string;
  date_left: string | null;
  time_in_study_days: number;
  status_code: number | null;
  flags: string[];
  colors: string[];
  sensors: Record<string, SensorCellDoc>;
}

export interface QcTableDoc {
  study_id: string;
  rows: QcRowDoc[];
}

export interface NotifyResponse {
  message: { message_id: string; title: string; body: string };
  queued_deliveries: number;
}

export interface ApiError {
  error_code: string;
  detail: string;
}

export function isApiError(doc: unknown): doc is ApiError {
  return typeof doc === 'object' && doc !== null && 'error_code' in doc;
}
