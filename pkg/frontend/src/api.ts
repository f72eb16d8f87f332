/**
 * Typed client for the gateway's JSON API.
 *
 * Card payloads always travel as `SPC1:` card-text strings. Every non-2xx
 * response carries {error, detail}; that error code is surfaced as a
 * GatewayError so screens can branch on it (409 AlreadyRedeemed vs 401
 * BadSignature vs 422 protocol-state failures).
 */

export const CARD_TEXT_PREFIX = "SPC1:";

export interface CouponFields {
  coupon_id: string;
  number: number;
  total: number;
  city: string;
  phase: string;
  age_band: string;
  job: string;
  comorbid: boolean;
}

export interface PiiInput {
  name: string;
  dob: string;
  sex?: string | null;
}

export interface DoseInput {
  manufacturer: string;
  dose_number: number;
  date: string;
  lot: string;
}

export interface ClinicInput {
  clinic_name: string;
  location: string;
  timestamp?: string;
}

export interface Dose1Result {
  badge_card_text: string;
  passkey_card_text: string;
}

export interface Dose2Result {
  badge_card_text: string;
  status_card_text: string;
}

export interface StatusResult {
  doses_received: number;
}

export interface NameResult {
  doses_received: number;
  name: string;
}

export interface FullRecordResult {
  doses_received: number;
  name: string;
  pii: { name: string; dob: string; sex: string | null };
  doses: DoseInput[];
  clinic: { clinic_name: string; location: string; timestamp: string };
}

export interface RegistryRecordInput {
  pseudo_id: string;
  city: string;
  phase: string;
  manufacturer: string;
  dose_number: number;
  date: string;
}

export interface SymptomInput {
  pseudo_id: string;
  days_since_dose: number;
  symptoms: string[];
  severity: number;
}

export interface AggregateResult {
  dimension: string;
  groups: { value: string; count: number }[];
}

export class GatewayError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    readonly detail: string,
  ) {
    super(`${code}: ${detail}`);
    this.name = "GatewayError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class GatewayClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json();
    if (!response.ok) {
      throw new GatewayError(
        response.status,
        typeof payload.error === "string" ? payload.error : "UnknownError",
        typeof payload.detail === "string" ? payload.detail : "",
      );
    }
    return payload as T;
  }

  checkin(cardText: string): Promise<CouponFields> {
    return this.request("POST", "/api/checkin", { card_text: cardText });
  }

  dose1(
    cardText: string,
    pii: PiiInput,
    dose: DoseInput,
    clinic: ClinicInput,
  ): Promise<Dose1Result> {
    return this.request("POST", "/api/dose1", {
      card_text: cardText,
      pii,
      dose,
      clinic,
    });
  }

  dose2(badgeText: string, passkeyText: string, dose: DoseInput): Promise<Dose2Result> {
    return this.request("POST", "/api/dose2", {
      badge_card_text: badgeText,
      passkey_card_text: passkeyText,
      dose,
    });
  }

  verifyStatus(cardText: string): Promise<StatusResult> {
    return this.request("POST", "/api/verify/status", { card_text: cardText });
  }

  verifyName(statusText: string, passkeyText: string, couponId: string): Promise<NameResult> {
    return this.request("POST", "/api/verify/name", {
      status_card_text: statusText,
      passkey_card_text: passkeyText,
      coupon_id: couponId,
    });
  }

  verifyFull(badgeText: string, passkeyText: string): Promise<FullRecordResult> {
    return this.request("POST", "/api/verify/full", {
      badge_card_text: badgeText,
      passkey_card_text: passkeyText,
    });
  }

  submitRecord(record: RegistryRecordInput): Promise<{ accepted: boolean }> {
    return this.request("POST", "/api/registry/record", record);
  }

  submitSymptom(report: SymptomInput): Promise<{ accepted: boolean }> {
    return this.request("POST", "/api/registry/symptom", report);
  }

  aggregate(dimension: string): Promise<AggregateResult> {
    return this.request("GET", `/api/registry/aggregate?dimension=${encodeURIComponent(dimension)}`);
  }

  health(): Promise<{ status: string }> {
    return this.request("GET", "/api/health");
  }
}
