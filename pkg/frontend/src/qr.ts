/**
 * Client-side QR rendering. The card text goes in verbatim; whatever a
 * scanner reads back must equal it byte for byte. Card texts stay inside
 * the QR alphanumeric charset (digits, upper-case letters, " $%*+-./:"),
 * so the encoder picks the compact alphanumeric mode on its own.
 */

import QRCode from "qrcode";

export interface QrPixels {
  data: Uint8ClampedArray;
  width: number;
  height: number;
}

/** Raw module matrix for a card text. */
export function qrModules(text: string): { size: number; get(x: number, y: number): boolean } {
  const symbol = QRCode.create(text, { errorCorrectionLevel: "M" });
  const size = symbol.modules.size;
  const data = symbol.modules.data;
  return {
    size,
    get: (x, y) => data[y * size + x] === 1,
  };
}

/** RGBA pixel buffer (scale px per module plus a quiet zone), decodable offline. */
export function qrToPixels(text: string, scale = 4, margin = 4): QrPixels {
  const modules = qrModules(text);
  const side = (modules.size + 2 * margin) * scale;
  const data = new Uint8ClampedArray(side * side * 4).fill(255);
  for (let y = 0; y < modules.size; y++) {
    for (let x = 0; x < modules.size; x++) {
      if (!modules.get(x, y)) continue;
      for (let dy = 0; dy < scale; dy++) {
        for (let dx = 0; dx < scale; dx++) {
          const px = (x + margin) * scale + dx;
          const py = (y + margin) * scale + dy;
          const offset = (py * side + px) * 4;
          data[offset] = 0;
          data[offset + 1] = 0;
          data[offset + 2] = 0;
        }
      }
    }
  }
  return { data, width: side, height: side };
}

/** Paint a card text onto a canvas element in the browser. */
export async function drawQr(canvas: HTMLCanvasElement, text: string): Promise<void> {
  await QRCode.toCanvas(canvas, text, { errorCorrectionLevel: "M", margin: 4, scale: 4 });
}
