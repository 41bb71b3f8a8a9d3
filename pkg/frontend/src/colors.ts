// The one documented flag -> palette mapping (kept in step with the
// server's qc module). Unknown flags render neutral.

export const FLAG_COLORS: Record<string, string> = {
  NO_DATA_48H: 'red',
  SENSOR_NOT_CHOSEN: 'grey',
  LEFT_TOO_EARLY: 'orange',
  DURATION_REACHED_NOT_LEFT: 'yellow',
  DURATION_REACHED_LEFT: 'green',
  MULTIPLE_ACTIVE: 'purple',
};

export const OK_COLOR = 'white';
export const NEUTRAL_COLOR = 'white';

export const LEGEND: Array<[string, string]> = [
  ['NO_DATA_48H', 'No data sent for 2 days'],
  ['SENSOR_NOT_CHOSEN', 'Sensor was not chosen'],
  ['LEFT_TOO_EARLY', 'Left study too early'],
  ['DURATION_REACHED_NOT_LEFT', 'Study duration reached, not left'],
  ['DURATION_REACHED_LEFT', 'Study duration reached, left'],
  ['MULTIPLE_ACTIVE', 'Multiple QR codes of one user active'],
];

export const STATUS_CODE_LEGEND: Array<[string, string]> = [
  ['', 'Everything is fine'],
  ['1', 'User left study with this QR code'],
  ['2', 'User reached study duration and left automatically'],
  ['3', 'Missing data'],
];

export function colorForFlag(flag: string): string {
  return FLAG_COLORS[flag] ?? NEUTRAL_COLOR;
}

export function rowColor(flags: string[]): string {
  for (const [flag] of LEGEND) {
    if (flags.includes(flag)) return FLAG_COLORS[flag];
  }
  return OK_COLOR;
}
