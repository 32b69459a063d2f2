/// Converts `B cos(st) + C sin(st)` to `A cos(st + phi)`.
///
/// `A = sqrt(B^2 + C^2)`, `phi = atan2(-C, B)` in degrees, wrapped to
/// `[0, 360)`. `(0, 0)` maps to `(0, 0)`.
pub fn raw_to_polar(b: f64, c: f64) -> (f64, f64) {
    let amplitude = b.hypot(c);
    if amplitude == 0.0 {
        return (0.0, 0.0);
    }
    (amplitude, normalize_degrees((-c).atan2(b).to_degrees()))
}

/// Inverse of [`raw_to_polar`]: `B = A cos(phi)`, `C = -A sin(phi)`.
pub fn polar_to_raw(amplitude: f64, phase_deg: f64) -> (f64, f64) {
    let (s, c) = phase_deg.to_radians().sin_cos();
    (amplitude * c, -amplitude * s)
}

/// Wraps an angle in degrees into `[0, 360)`.
pub fn normalize_degrees(deg: f64) -> f64 {
    let wrapped = deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if wrapped >= 360.0 {
        0.0
    } else {
        wrapped
    }
}
