//! C ABI for the `pharm` library.
//!
//! Every function returns a [`PharmStatus`]; results go through out
//! pointers. On failure the message is kept per thread and can be read with
//! [`pharm_last_error`]. Meshes and fields are opaque handles owned by the
//! caller and released with their `_free` functions.
//!
//! Pointer arguments are checked for null; beyond that the caller guarantees
//! that they are valid for the stated lengths and that handles come from this
//! library and are not used after they are freed.

#![allow(clippy::not_unsafe_ptr_arg_deref)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;
use std::sync::Arc;

use pharm::analytic::{annulus_decay_constant, PExponents};
use pharm::cli::{parse_config, run};
use pharm::discretization::{AnnularMesh2D, AnnulusSamples, Discretization, RadialGrid, ScalarField};
use pharm::energy_solver::{solve, BoundaryPiece, OuterTrace, ProblemSpec};
use pharm::radial_bvp::{shoot_radial, solve_radial, BoundaryLaw, FarField, RadialBvp};
use pharm::verification::{
    build_cutoff, caccioppoli_check, classify_dichotomy, DichotomyThresholds, DichotomyVerdict, Transition,
};
use pharm::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PharmStatus {
    Ok = 0,
    NullPointer = 1,
    Config = 2,
    Domain = 3,
    Precondition = 4,
    Solver = 5,
    NonConvergence = 6,
    Oracle = 7,
    Io = 8,
    Panic = 9,
    BufferTooSmall = 10,
}

impl From<&Error> for PharmStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Config(_) => PharmStatus::Config,
            Error::Domain(_) => PharmStatus::Domain,
            Error::Precondition(_) => PharmStatus::Precondition,
            Error::Solver(_) => PharmStatus::Solver,
            Error::NonConvergence { .. } => PharmStatus::NonConvergence,
            Error::Oracle(_) => PharmStatus::Oracle,
            Error::Io(_) => PharmStatus::Io,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type FfiResult<T> = std::result::Result<T, Failure>;

fn guard<F: FnOnce() -> FfiResult<()>>(f: F) -> PharmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            PharmStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            PharmStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            PharmStatus::from(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            PharmStatus::Panic
        }
    }
}

fn out<'a, T>(p: *mut T, what: &'static str) -> FfiResult<&'a mut T> {
    // SAFETY: the caller passes either null or a valid, writable pointer.
    unsafe { p.as_mut() }.ok_or(Failure::Null(what))
}

fn input<'a, T>(p: *const T, n: usize, what: &'static str) -> FfiResult<&'a [T]> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    // SAFETY: non-null and the caller guarantees `n` readable elements.
    Ok(unsafe { slice::from_raw_parts(p, n) })
}

fn output<'a, T>(p: *mut T, n: usize, what: &'static str) -> FfiResult<&'a mut [T]> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    // SAFETY: non-null and the caller guarantees `n` writable elements.
    Ok(unsafe { slice::from_raw_parts_mut(p, n) })
}

fn text<'a>(p: *const c_char, what: &'static str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    // SAFETY: non-null, NUL-terminated per the API contract.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Failure::Lib(Error::Config(format!("{what} is not valid UTF-8"))))
}

/// Copies the calling thread's last error message (NUL-terminated) into
/// `buf` and stores the required size, including the terminator, in
/// `needed`. Passing `len == 0` only queries the size.
#[no_mangle]
pub extern "C" fn pharm_last_error(buf: *mut c_char, len: usize, needed: *mut usize) -> PharmStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    let bytes = msg.as_bytes();
    // SAFETY: as for `out`; null is allowed here.
    if let Some(n) = unsafe { needed.as_mut() } {
        *n = bytes.len() + 1;
    }
    if len == 0 {
        return PharmStatus::Ok;
    }
    if buf.is_null() {
        return PharmStatus::NullPointer;
    }
    if len < bytes.len() + 1 {
        return PharmStatus::BufferTooSmall;
    }
    // SAFETY: `buf` has room for `len >= bytes.len() + 1` bytes.
    unsafe {
        ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, bytes.len());
        *buf.add(bytes.len()) = 0;
    }
    PharmStatus::Ok
}

/// `μ_p(r)`: `r^κ`, or `ln r` when `p = d`.
#[no_mangle]
pub extern "C" fn pharm_mu(p: f64, d: u32, r: f64, value: *mut f64) -> PharmStatus {
    guard(|| {
        let v = PExponents::new(p, d)?.mu(r)?;
        *out(value, "value")? = v;
        Ok(())
    })
}

/// Gradient of `μ_p` at the point `x` of length `d`; `grad` receives `d` values.
#[no_mangle]
pub extern "C" fn pharm_mu_grad(p: f64, d: u32, x: *const f64, grad: *mut f64) -> PharmStatus {
    guard(|| {
        let x = input(x, d as usize, "x")?;
        let g = PExponents::new(p, d)?.mu_grad(x)?;
        output(grad, d as usize, "grad")?.copy_from_slice(&g);
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn pharm_annulus_decay_constant(p: f64, d: u32, value: *mut f64) -> PharmStatus {
    guard(|| {
        let c = annulus_decay_constant(&PExponents::new(p, d)?);
        *out(value, "value")? = c;
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PharmLawKind {
    Dirichlet = 0,
    Neumann = 1,
    Robin = 2,
}

/// Hole boundary law; `value` is the Dirichlet datum or the Robin `alpha`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PharmLaw {
    pub kind: PharmLawKind,
    pub value: f64,
}

impl PharmLaw {
    fn law(&self) -> BoundaryLaw {
        match self.kind {
            PharmLawKind::Dirichlet => BoundaryLaw::DirichletValue(self.value),
            PharmLawKind::Neumann => BoundaryLaw::NeumannZero,
            PharmLawKind::Robin => BoundaryLaw::RobinPower { alpha: self.value },
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PharmFarKind {
    Limit = 0,
    OuterDirichlet = 1,
    Growth = 2,
}

/// Far-field condition; `radius` is used by `OuterDirichlet` only.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PharmFar {
    pub kind: PharmFarKind,
    pub value: f64,
    pub radius: f64,
}

impl PharmFar {
    fn far(&self) -> FarField {
        match self.kind {
            PharmFarKind::Limit => FarField::Limit(self.value),
            PharmFarKind::OuterDirichlet => FarField::OuterDirichlet {
                radius: self.radius,
                value: self.value,
            },
            PharmFarKind::Growth => FarField::GrowthCoefficient(self.value),
        }
    }
}

fn bvp(p: f64, d: u32, r_in: f64, law: PharmLaw, far: PharmFar) -> pharm::Result<RadialBvp> {
    RadialBvp::new(r_in, law.law(), far.far(), PExponents::new(p, d)?)
}

/// Exact radial solution `offset + coefficient μ_p(r)`.
#[no_mangle]
pub extern "C" fn pharm_solve_radial(
    p: f64,
    d: u32,
    r_in: f64,
    law: PharmLaw,
    far: PharmFar,
    offset: *mut f64,
    coefficient: *mut f64,
) -> PharmStatus {
    guard(|| {
        let profile = solve_radial(&bvp(p, d, r_in, law, far)?)?;
        *out(offset, "offset")? = profile.offset;
        *out(coefficient, "coefficient")? = profile.coefficient;
        Ok(())
    })
}

/// Shooting solution at the `n` radii (increasing, starting at `r_in`).
#[no_mangle]
pub extern "C" fn pharm_shoot_radial(
    p: f64,
    d: u32,
    r_in: f64,
    law: PharmLaw,
    far: PharmFar,
    radii: *const f64,
    n: usize,
    values: *mut f64,
) -> PharmStatus {
    guard(|| {
        let radii = input(radii, n, "radii")?;
        let grid = RadialGrid::new(d, radii.to_vec())?;
        let v = shoot_radial(&bvp(p, d, r_in, law, far)?, &grid)?;
        output(values, n, "values")?.copy_from_slice(&v);
        Ok(())
    })
}

#[derive(Clone)]
enum MeshInner {
    Annulus(Arc<AnnularMesh2D>),
    Radial(Arc<RadialGrid>),
}

/// Opaque mesh handle.
pub struct PharmMesh {
    inner: MeshInner,
}

impl PharmMesh {
    fn as_dyn(&self) -> &dyn Discretization {
        match &self.inner {
            MeshInner::Annulus(m) => m.as_ref(),
            MeshInner::Radial(m) => m.as_ref(),
        }
    }
}

/// Opaque nodal field handle; keeps its mesh alive.
pub struct PharmField {
    inner: FieldInner,
}

enum FieldInner {
    Annulus(ScalarField<AnnularMesh2D>),
    Radial(ScalarField<RadialGrid>),
}

impl FieldInner {
    fn values(&self) -> &[f64] {
        match self {
            FieldInner::Annulus(f) => f.values(),
            FieldInner::Radial(f) => f.values(),
        }
    }
}

fn boxed<T>(value: T, slot: *mut *mut T, what: &'static str) -> FfiResult<()> {
    let slot = out(slot, what)?;
    *slot = Box::into_raw(Box::new(value));
    Ok(())
}

fn handle<'a, T>(p: *const T, what: &'static str) -> FfiResult<&'a T> {
    // SAFETY: the caller passes null or a live handle from this library.
    unsafe { p.as_ref() }.ok_or(Failure::Null(what))
}

/// Planar annulus `r_in <= |x| <= r_out` with `n_r × n_theta` nodes.
#[no_mangle]
pub extern "C" fn pharm_mesh_annulus_new(
    r_in: f64,
    r_out: f64,
    n_r: usize,
    n_theta: usize,
    grading: f64,
    mesh: *mut *mut PharmMesh,
) -> PharmStatus {
    guard(|| {
        let m = AnnularMesh2D::new(r_in, r_out, n_r, n_theta, grading)?;
        boxed(
            PharmMesh {
                inner: MeshInner::Annulus(Arc::new(m)),
            },
            mesh,
            "mesh",
        )
    })
}

/// Radial grid in dimension `d` with `n` geometrically graded radii.
#[no_mangle]
pub extern "C" fn pharm_mesh_radial_new(
    d: u32,
    r_in: f64,
    r_out: f64,
    n: usize,
    grading: f64,
    mesh: *mut *mut PharmMesh,
) -> PharmStatus {
    guard(|| {
        let m = RadialGrid::geometric(d, r_in, r_out, n, grading)?;
        boxed(
            PharmMesh {
                inner: MeshInner::Radial(Arc::new(m)),
            },
            mesh,
            "mesh",
        )
    })
}

/// Releases a mesh; null is ignored. Fields built on it stay valid.
#[no_mangle]
pub extern "C" fn pharm_mesh_free(mesh: *mut PharmMesh) {
    if !mesh.is_null() {
        // SAFETY: created by `Box::into_raw` in this library and freed once.
        drop(unsafe { Box::from_raw(mesh) });
    }
}

#[no_mangle]
pub extern "C" fn pharm_mesh_node_count(mesh: *const PharmMesh, count: *mut usize) -> PharmStatus {
    guard(|| {
        let n = handle(mesh, "mesh")?.as_dyn().node_count();
        *out(count, "count")? = n;
        Ok(())
    })
}

/// Polar coordinates of node `node`.
#[no_mangle]
pub extern "C" fn pharm_mesh_node_polar(
    mesh: *const PharmMesh,
    node: usize,
    r: *mut f64,
    theta: *mut f64,
) -> PharmStatus {
    guard(|| {
        let m = handle(mesh, "mesh")?.as_dyn();
        if node >= m.node_count() {
            return Err(Error::Precondition(format!("node {node} out of range")).into());
        }
        let (a, b) = m.node_polar(node);
        *out(r, "r")? = a;
        *out(theta, "theta")? = b;
        Ok(())
    })
}

/// Field from `n` nodal values (`n` must equal the node count).
#[no_mangle]
pub extern "C" fn pharm_field_new(
    mesh: *const PharmMesh,
    values: *const f64,
    n: usize,
    field: *mut *mut PharmField,
) -> PharmStatus {
    guard(|| {
        let m = handle(mesh, "mesh")?;
        let v = input(values, n, "values")?.to_vec();
        let inner = match &m.inner {
            MeshInner::Annulus(a) => FieldInner::Annulus(ScalarField::new(a.clone(), v)?),
            MeshInner::Radial(g) => FieldInner::Radial(ScalarField::new(g.clone(), v)?),
        };
        boxed(PharmField { inner }, field, "field")
    })
}

#[no_mangle]
pub extern "C" fn pharm_field_free(field: *mut PharmField) {
    if !field.is_null() {
        // SAFETY: created by `Box::into_raw` in this library and freed once.
        drop(unsafe { Box::from_raw(field) });
    }
}

/// Copies the nodal values into `values` (capacity `n`).
#[no_mangle]
pub extern "C" fn pharm_field_values(field: *const PharmField, values: *mut f64, n: usize) -> PharmStatus {
    guard(|| {
        let v = handle(field, "field")?.inner.values();
        if n < v.len() {
            return Err(Failure::Lib(Error::Precondition(format!(
                "buffer holds {n} values, field has {}",
                v.len()
            ))));
        }
        output(values, v.len(), "values")?.copy_from_slice(v);
        Ok(())
    })
}

/// Minimizes the regularized energy with `law` on the whole hole boundary
/// and `outer_value` on the outer circle, using the default schedule and
/// tolerances. `energy` may be null.
#[no_mangle]
pub extern "C" fn pharm_solve(
    mesh: *const PharmMesh,
    p: f64,
    law: PharmLaw,
    outer_value: f64,
    field: *mut *mut PharmField,
    energy: *mut f64,
) -> PharmStatus {
    guard(|| {
        let m = handle(mesh, "mesh")?;
        let pieces = vec![BoundaryPiece::full(law.law())];
        let trace = OuterTrace::Value(outer_value);
        let (inner, e) = match &m.inner {
            MeshInner::Annulus(a) => {
                let spec = ProblemSpec::new(a.clone(), PExponents::new(p, 2)?, pieces, trace)?;
                let rep = solve(&spec, None)?;
                (FieldInner::Annulus(rep.solution), rep.energy)
            }
            MeshInner::Radial(g) => {
                let spec = ProblemSpec::new(g.clone(), PExponents::new(p, g.dimension())?, pieces, trace)?;
                let rep = solve(&spec, None)?;
                (FieldInner::Radial(rep.solution), rep.energy)
            }
        };
        // SAFETY: null is allowed for the optional energy output.
        if let Some(slot) = unsafe { energy.as_mut() } {
            *slot = e;
        }
        boxed(PharmField { inner }, field, "field")
    })
}

/// Both sides of the cutoff energy inequality at radius `r` with the
/// exponential-bump cutoff. `holds` receives 1 or 0.
#[no_mangle]
pub extern "C" fn pharm_caccioppoli(
    field: *const PharmField,
    p: f64,
    b: f64,
    r: f64,
    lhs: *mut f64,
    rhs: *mut f64,
    holds: *mut i32,
) -> PharmStatus {
    guard(|| {
        let f = handle(field, "field")?;
        let cutoff = build_cutoff(Transition::ExpBump, r)?;
        let rep = match &f.inner {
            FieldInner::Annulus(s) => caccioppoli_check(s.mesh().as_ref(), s, b, &cutoff, &PExponents::new(p, 2)?)?,
            FieldInner::Radial(s) => {
                let e = PExponents::new(p, s.mesh().dimension())?;
                caccioppoli_check(s.mesh().as_ref(), s, b, &cutoff, &e)?
            }
        };
        *out(lhs, "lhs")? = rep.lhs;
        *out(rhs, "rhs")? = rep.rhs;
        *out(holds, "holds")? = rep.holds as i32;
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PharmVerdict {
    ConstantLimit = 0,
    FundamentalGrowth = 1,
    Undetermined = 2,
}

/// Limit-versus-growth classification of circle means at dyadic radii.
/// `value` receives the limit or the signed growth coefficient (NaN when
/// undetermined). Non-positive thresholds select the defaults.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub extern "C" fn pharm_classify(
    p: f64,
    d: u32,
    radii: *const f64,
    means: *const f64,
    n: usize,
    ratio: f64,
    growth_band: f64,
    verdict: *mut PharmVerdict,
    value: *mut f64,
) -> PharmStatus {
    guard(|| {
        let e = PExponents::new(p, d)?;
        let samples =
            AnnulusSamples::from_values(input(radii, n, "radii")?.to_vec(), input(means, n, "means")?.to_vec())?;
        let mut t = DichotomyThresholds::default();
        if ratio > 0.0 {
            t.ratio = ratio;
        }
        if growth_band > 0.0 {
            t.growth_band = growth_band;
        }
        let (kind, v) = match classify_dichotomy(&samples, &e, t) {
            DichotomyVerdict::ConstantLimit(b) => (PharmVerdict::ConstantLimit, b),
            DichotomyVerdict::FundamentalGrowth { c, sign } => (PharmVerdict::FundamentalGrowth, c * sign as f64),
            DichotomyVerdict::Undetermined(_) => (PharmVerdict::Undetermined, f64::NAN),
        };
        *out(verdict, "verdict")? = kind;
        *out(value, "value")? = v;
        Ok(())
    })
}

/// Parses `config` (the `key = value` format of the command-line tool), runs
/// it and writes the artifacts under `out_dir`. `exit_status` receives the
/// command-line exit status of the run (0 when every check passed, 3 when a
/// check failed).
#[no_mangle]
pub extern "C" fn pharm_run_config(
    config: *const c_char,
    out_dir: *const c_char,
    exit_status: *mut i32,
) -> PharmStatus {
    guard(|| {
        let cfg = parse_config(text(config, "config")?).map_err(Error::from)?;
        let root = text(out_dir, "out_dir")?;
        let (_, art) = run(&cfg, Path::new(root))?;
        *out(exit_status, "exit_status")? = art.status;
        Ok(())
    })
}
