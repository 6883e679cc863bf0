import { describe, expect, it } from "vitest";

import { DASH, bucketLabel, pValue, percent } from "../src/format";

describe("percent", () => {
  it("formats to one decimal", () => {
    expect(percent(0.347)).toBe("34.7%");
    expect(percent(1)).toBe("100.0%");
  });

  it("dashes missing values", () => {
    expect(percent(null)).toBe(DASH);
    expect(percent(undefined)).toBe(DASH);
    expect(percent(Number.NaN)).toBe(DASH);
  });
});

describe("pValue", () => {
  it("renders four decimals", () => {
    expect(pValue(0.0178)).toBe("0.0178");
    expect(pValue(0.03572)).toBe("0.0357");
    expect(pValue(1)).toBe("1.0000");
  });

  it("dashes null", () => {
    expect(pValue(null)).toBe(DASH);
  });
});

describe("bucketLabel", () => {
  it("labels half-open buckets", () => {
    expect(bucketLabel(null, 0)).toBe("< 0");
    expect(bucketLabel(0, 1)).toBe("[0, 1)");
    expect(bucketLabel(2, null)).toBe("≥ 2");
  });
});
