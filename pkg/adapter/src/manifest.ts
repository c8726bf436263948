/**
 * Input manifest: CSV with header `id,image_path,text,label`.
 * Empty text means "caption it"; empty label means "membership unknown".
 */

export interface ManifestRow {
  id: string;
  imagePath: string;
  text: string | null;
  label: 0 | 1 | null;
}

export function parseManifest(content: string): ManifestRow[] {
  const lines = content.split(/\r?\n/).filter((line) => line.trim().length > 0);
  if (lines.length === 0) throw new Error('empty manifest');
  const header = splitCsvLine(lines[0]).map((f) => f.trim().toLowerCase());
  const expected = ['id', 'image_path', 'text', 'label'];
  if (header.join(',') !== expected.join(',')) {
    throw new Error(`manifest header must be "${expected.join(',')}", got "${lines[0]}"`);
  }
  const rows: ManifestRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const fields = splitCsvLine(lines[i]);
    if (fields.length !== 4) {
      throw new Error(`manifest line ${i + 1}: expected 4 fields, got ${fields.length}`);
    }
    const [id, imagePath, text, labelText] = fields;
    if (!id) throw new Error(`manifest line ${i + 1}: empty id`);
    let label: 0 | 1 | null = null;
    if (labelText.trim() !== '') {
      const parsed = Number(labelText);
      if (parsed !== 0 && parsed !== 1) {
        throw new Error(`manifest line ${i + 1}: label must be 0, 1 or empty`);
      }
      label = parsed as 0 | 1;
    }
    rows.push({ id, imagePath, text: text.trim() === '' ? null : text, label });
  }
  return rows;
}

/** Minimal quote-aware CSV field splitter ("" escapes a quote). */
function splitCsvLine(line: string): string[] {
  const fields: string[] = [];
  let current = '';
  let quoted = false;
  for (let i = 0; i < line.length; i++) {
    const ch = line[i];
    if (quoted) {
      if (ch === '"') {
        if (line[i + 1] === '"') {
          current += '"';
          i++;
        } else {
          quoted = false;
        }
      } else {
        current += ch;
      }
    } else if (ch === '"') {
      quoted = true;
    } else if (ch === ',') {
      fields.push(current);
      current = '';
    } else {
      current += ch;
    }
  }
  fields.push(current);
  return fields;
}
