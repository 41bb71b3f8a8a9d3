// QR rendering: the server hands us the exact payload string; we rasterize
// client-side. SVG keeps the printable sheet crisp at any size.

import QRCode from 'qrcode';

export function qrSvg(payload: string, width = 180): Promise<string> {
  return QRCode.toString(payload, { type: 'svg', width, margin: 2 });
}

export async function qrSheet(
  tokens: Array<{ token_id: string; qr_payload: string }>,
): Promise<string> {
  const cells = await Promise.all(
    tokens.map(async (t) => {
      const svg = await qrSvg(t.qr_payload);
      return `<figure class="qr-cell">${svg}<figcaption>${escapeHtml(t.token_id)}</figcaption></figure>`;
    }),
  );
  return `<div class="qr-sheet">${cells.join('')}</div>`;
}

export function escapeHtml(text: string): string {
  return text
    .replaceAll('&', '&amp;')
    .replaceAll('<', '&lt;')
    .replaceAll('>', '&gt;')
    .replaceAll('"', '&quot;');
}
