//! sRGB to HSV and CIE L*u*v* conversions.

/// Hue in degrees `[0, 360)`, saturation and value in `[0, 1]`. Gray pixels get hue 0.
pub fn rgb_to_hsv(rgb: [u8; 3]) -> [f64; 3] {
    let [r, g, b] = rgb.map(|c| f64::from(c) / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    [if h >= 360.0 { h - 360.0 } else { h }, s, v]
}

fn srgb_to_linear(c: u8) -> f64 {
    let c = f64::from(c) / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

// D65 white point
const XN: f64 = 0.95047;
const YN: f64 = 1.0;
const ZN: f64 = 1.08883;

/// CIE L*u*v* under D65. L in `[0, 100]`.
pub fn rgb_to_luv(rgb: [u8; 3]) -> [f64; 3] {
    let [r, g, b] = rgb.map(srgb_to_linear);
    let x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    let y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    let z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;

    let yr = y / YN;
    let l = if yr > (6.0f64 / 29.0).powi(3) {
        116.0 * yr.cbrt() - 16.0
    } else {
        (29.0f64 / 3.0).powi(3) * yr
    };
    let denom = x + 15.0 * y + 3.0 * z;
    if denom == 0.0 {
        return [0.0, 0.0, 0.0];
    }
    let un = 4.0 * XN / (XN + 15.0 * YN + 3.0 * ZN);
    let vn = 9.0 * YN / (XN + 15.0 * YN + 3.0 * ZN);
    let u_prime = 4.0 * x / denom;
    let v_prime = 9.0 * y / denom;
    [l, 13.0 * l * (u_prime - un), 13.0 * l * (v_prime - vn)]
}

/// Mean of angles in degrees by vector averaging, in `[0, 360)`. Returns 0
/// when the resultant vanishes (including an empty input).
pub fn circular_mean_deg(sum_cos: f64, sum_sin: f64) -> f64 {
    if sum_cos.hypot(sum_sin) < 1e-9 {
        return 0.0;
    }
    let deg = sum_sin.atan2(sum_cos).to_degrees();
    let deg = if deg < 0.0 { deg + 360.0 } else { deg };
    if deg >= 360.0 {
        0.0
    } else {
        deg
    }
}
