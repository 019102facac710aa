/**
 * Training-log parsing: one flat JSON object per line, at least an
 * `epoch` and a `loss` field, `val_map` optional.
 */

export interface EpochRecord {
  epoch: number;
  loss: number;
  valMap?: number;
}

export function parseTrainingLog(text: string): EpochRecord[] {
  const records: EpochRecord[] = [];
  const lines = text.split("\n");
  for (const [i, line] of lines.entries()) {
    if (line.trim() === "") {
      continue;
    }
    let raw: unknown;
    try {
      raw = JSON.parse(line);
    } catch {
      throw new Error(`line ${i + 1}: not a JSON record`);
    }
    if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
      throw new Error(`line ${i + 1}: expected an object`);
    }
    const obj = raw as Record<string, unknown>;
    const epoch = obj["epoch"];
    const loss = obj["loss"];
    if (typeof epoch !== "number" || !Number.isInteger(epoch) || epoch < 1) {
      throw new Error(`line ${i + 1}: bad epoch ${JSON.stringify(epoch)}`);
    }
    if (typeof loss !== "number" || !Number.isFinite(loss)) {
      throw new Error(`line ${i + 1}: bad loss ${JSON.stringify(loss)}`);
    }
    const record: EpochRecord = { epoch, loss };
    if ("val_map" in obj) {
      const valMap = obj["val_map"];
      if (typeof valMap !== "number" || !Number.isFinite(valMap)) {
        throw new Error(`line ${i + 1}: bad val_map ${JSON.stringify(valMap)}`);
      }
      record.valMap = valMap;
    }
    records.push(record);
  }
  if (records.length === 0) {
    throw new Error("log holds no records");
  }
  return records;
}
