export interface CatalogEntry {
  id: string;
  thumb: string; // base64 PNG
}

export interface Catalog {
  persons: CatalogEntry[];
  garments: CatalogEntry[];
}

export interface TryonResult {
  person_id: string;
  garment_id: string;
  result_png: string;
  seg_png: string;
  warped_png: string;
  timing_ms: number;
}

/** Error carrying the service's machine-readable code (e.g.
 * "empty_target_region") alongside a display message. */
export class ServiceError extends Error {
  constructor(
    public code: string,
    message: string,
    public status: number,
  ) {
    super(message);
  }
}

const FRIENDLY: Record<string, string> = {
  unknown_person: "That person is no longer in the catalog.",
  unknown_garment: "That garment is no longer in the catalog.",
  empty_target_region:
    "No transferable clothing region was found on this person. Try another photo.",
  checkpoint_missing:
    "The try-on model is not loaded on the server yet. Try again later.",
};

export function friendlyMessage(err: unknown): string {
  if (err instanceof ServiceError) {
    return FRIENDLY[err.code] ?? `${err.message} (${err.code})`;
  }
  return err instanceof Error ? err.message : String(err);
}

async function raiseForStatus(resp: Response): Promise<void> {
  if (resp.ok) return;
  let code = "http_error";
  let message = `request failed with status ${resp.status}`;
  try {
    const body = await resp.json();
    if (body?.detail?.code) {
      code = body.detail.code;
      message = body.detail.message ?? message;
    }
  } catch {
    // non-JSON error body: keep the generic message
  }
  throw new ServiceError(code, message, resp.status);
}

export class TryonClient {
  constructor(private baseUrl: string = "") {}

  async getCatalog(): Promise<Catalog> {
    const resp = await fetch(`${this.baseUrl}/catalog`);
    await raiseForStatus(resp);
    const body = await resp.json();
    if (!body?.persons || !body?.garments) {
      throw new Error(`malformed catalog: ${JSON.stringify(body)}`);
    }
    return body;
  }

  async tryon(personId: string, garmentId: string): Promise<TryonResult> {
    const resp = await fetch(`${this.baseUrl}/tryon`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ person_id: personId, garment_id: garmentId }),
    });
    await raiseForStatus(resp);
    return resp.json();
  }
}
