/**
 * Strict parsing for the simulator's CSV outputs.
 *
 * The upstream writer never quotes fields (values are numbers and bare
 * strategy names), always uses `\n` line endings, and ends the file with a
 * trailing newline, so this parser is deliberately minimal: it splits on
 * commas and rejects anything ragged rather than guessing.
 */

export interface Table {
  columns: string[];
  rows: string[][];
}

export function parseCsv(text: string): Table {
  const lines = text.split("\n");
  if (lines.length > 0 && lines[lines.length - 1] === "") lines.pop();
  if (lines.length === 0 || lines[0] === "") throw new Error("empty CSV: missing header line");
  const columns = lines[0].split(",");
  const rows: string[][] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== columns.length) {
      throw new Error(`CSV line ${i + 1}: expected ${columns.length} fields, got ${cells.length}`);
    }
    rows.push(cells);
  }
  return { columns, rows };
}

/** Error unless the table's header is exactly `expected`, in order. */
export function checkColumns(table: Table, expected: readonly string[], kind: string): void {
  const actual = table.columns.join(",");
  if (actual !== expected.join(",")) {
    throw new Error(`${kind}: expected columns ${expected.join(",")} but input has ${actual}`);
  }
}

export function columnIndex(table: Table, name: string): number {
  const index = table.columns.indexOf(name);
  if (index < 0) throw new Error(`no column named ${name}`);
  return index;
}

export function strings(table: Table, name: string): string[] {
  const index = columnIndex(table, name);
  return table.rows.map((row) => row[index]);
}

/** A column as finite numbers; errors on anything else (including NaN). */
export function numbers(table: Table, name: string): number[] {
  const index = columnIndex(table, name);
  return table.rows.map((row, i) => {
    const value = Number(row[index]);
    if (row[index] === "" || !Number.isFinite(value)) {
      throw new Error(`column ${name}, CSV line ${i + 2}: not a finite number: "${row[index]}"`);
    }
    return value;
  });
}

/** Concatenate tables that share an identical header. */
export function concatTables(tables: Table[]): Table {
  if (tables.length === 0) throw new Error("no tables to concatenate");
  const columns = tables[0].columns;
  const rows: string[][] = [];
  for (const table of tables) {
    if (table.columns.join(",") !== columns.join(",")) {
      throw new Error("cannot concatenate CSV inputs with different headers");
    }
    rows.push(...table.rows);
  }
  return { columns, rows };
}
