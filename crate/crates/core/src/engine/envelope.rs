/// Time dependence of a Hermitian drive term. Amplitudes are angular
/// frequencies in rad/ns, times in ns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriveEnvelope {
    Constant { amplitude: f64 },
    Gaussian { amplitude: f64, center: f64, width: f64 },
    /// Rectangular window, on for `start <= t < end`.
    Window { amplitude: f64, start: f64, end: f64 },
}

impl DriveEnvelope {
    pub fn constant(amplitude: f64) -> Self {
        Self::Constant { amplitude }
    }

    pub fn gaussian(amplitude: f64, center: f64, width: f64) -> Self {
        Self::Gaussian {
            amplitude,
            center,
            width,
        }
    }

    pub fn window(amplitude: f64, start: f64, end: f64) -> Self {
        Self::Window {
            amplitude,
            start,
            end,
        }
    }

    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Self::Constant { amplitude } => amplitude,
            Self::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let x = (t - center) / width;
                amplitude * (-0.5 * x * x).exp()
            }
            Self::Window {
                amplitude,
                start,
                end,
            } => {
                if t >= start && t < end {
                    amplitude
                } else {
                    0.0
                }
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Self::Constant { .. })
    }

    pub fn peak(&self) -> f64 {
        match *self {
            Self::Constant { amplitude }
            | Self::Gaussian { amplitude, .. }
            | Self::Window { amplitude, .. } => amplitude.abs(),
        }
    }

    /// Discontinuities the integrator must land on exactly.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            Self::Window { start, end, .. } => vec![start, end],
            _ => Vec::new(),
        }
    }

    /// Time the drive effectively switches on. For a Gaussian this is three
    /// widths before the peak, where the envelope is ~1.1% of its maximum.
    pub fn onset(&self) -> f64 {
        match *self {
            Self::Constant { .. } => 0.0,
            Self::Gaussian { center, width, .. } => center - 3.0 * width,
            Self::Window { start, .. } => start,
        }
    }
}
