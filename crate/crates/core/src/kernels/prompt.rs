use super::KernelError;

/// Slack allowed on `r_sbj + r_obj <= 1` for ratios computed from pixel counts.
const RATIO_SLACK: f64 = 1e-12;

/// Learnable subject, object and background prompt tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptTokens {
    sbj: Vec<f64>,
    obj: Vec<f64>,
    bg: Vec<f64>,
}

impl PromptTokens {
    pub fn new(sbj: Vec<f64>, obj: Vec<f64>, bg: Vec<f64>) -> Result<Self, KernelError> {
        if sbj.len() != obj.len() || sbj.len() != bg.len() {
            return Err(KernelError::Shape(format!(
                "token lengths {}, {}, {} differ",
                sbj.len(),
                obj.len(),
                bg.len()
            )));
        }
        for (name, t) in [("subject", &sbj), ("object", &obj), ("background", &bg)] {
            if norm(t) == 0.0 {
                return Err(KernelError::ZeroToken(name));
            }
        }
        Ok(Self { sbj, obj, bg })
    }

    pub fn dim(&self) -> usize {
        self.sbj.len()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Weights `[subject, object, background]` applied to the normalized tokens.
///
/// In ratio mode the three weights sum to exactly 1. Binary mode maps each
/// ratio to 1 when positive and 0 otherwise, clamping the background weight
/// at 0 when both are 1.
pub fn prompt_coefficients(r_sbj: f64, r_obj: f64, binary: bool) -> Result<[f64; 3], KernelError> {
    if !(r_sbj >= 0.0 && r_obj >= 0.0 && r_sbj + r_obj <= 1.0 + RATIO_SLACK) {
        return Err(KernelError::InvalidRatios { r_sbj, r_obj });
    }
    if binary {
        let s = if r_sbj > 0.0 { 1.0 } else { 0.0 };
        let o = if r_obj > 0.0 { 1.0 } else { 0.0 };
        return Ok([s, o, (1.0 - s - o).max(0.0)]);
    }
    Ok([r_sbj, r_obj, 1.0 - (r_sbj + r_obj)])
}

/// Adds the weighted sum of magnitude-normalized prompt tokens to a patch token.
pub fn encode_patch_token(
    patch: &[f64],
    r_sbj: f64,
    r_obj: f64,
    tokens: &PromptTokens,
    binary: bool,
) -> Result<Vec<f64>, KernelError> {
    if patch.len() != tokens.dim() {
        return Err(KernelError::Shape(format!(
            "patch has {} dims, tokens have {}",
            patch.len(),
            tokens.dim()
        )));
    }
    let [ws, wo, wb] = prompt_coefficients(r_sbj, r_obj, binary)?;
    let (ns, no, nb) = (norm(&tokens.sbj), norm(&tokens.obj), norm(&tokens.bg));
    Ok(patch
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            x + ws * tokens.sbj[i] / ns + wo * tokens.obj[i] / no + wb * tokens.bg[i] / nb
        })
        .collect())
}

/// Bounding box in pixel-edge coordinates: left, top, right, bottom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxCoords {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl BoxCoords {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self { x1, y1, x2, y2 }
    }

    fn check(&self, what: &'static str, w: f64, h: f64) -> Result<(), KernelError> {
        let ok = 0.0 <= self.x1
            && self.x1 <= self.x2
            && self.x2 <= w
            && 0.0 <= self.y1
            && self.y1 <= self.y2
            && self.y2 <= h;
        if ok {
            Ok(())
        } else {
            Err(KernelError::InvalidBox {
                what,
                detail: format!("{self:?} not inside {w}x{h}"),
            })
        }
    }
}

/// Subject and object boxes mapped to `[-1, 1]` and stacked as
/// `(x1 y1 x2 y2)` of the subject followed by the object.
pub fn location_token_input(
    sbj: BoxCoords,
    obj: BoxCoords,
    w: f64,
    h: f64,
) -> Result<[f64; 8], KernelError> {
    if !(w > 0.0 && h > 0.0) {
        return Err(KernelError::InvalidBox {
            what: "extent",
            detail: format!("image extent {w}x{h} must be positive"),
        });
    }
    sbj.check("subject", w, h)?;
    obj.check("object", w, h)?;
    let nx = |c: f64| 2.0 * c / w - 1.0;
    let ny = |c: f64| 2.0 * c / h - 1.0;
    Ok([
        nx(sbj.x1),
        ny(sbj.y1),
        nx(sbj.x2),
        ny(sbj.y2),
        nx(obj.x1),
        ny(obj.y1),
        nx(obj.x2),
        ny(obj.y2),
    ])
}

/// Row-major index of an ordered (subject class, object class) pair.
pub fn semantic_index(
    subject_class: usize,
    object_class: usize,
    classes: usize,
) -> Result<usize, KernelError> {
    if subject_class >= classes || object_class >= classes {
        return Err(KernelError::ClassOutOfRange {
            subject: subject_class,
            object: object_class,
            classes,
        });
    }
    Ok(subject_class * classes + object_class)
}
