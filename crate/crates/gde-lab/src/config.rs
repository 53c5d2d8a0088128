//! Scenario configuration: TOML sections per module, validated before any
//! output is produced.

use gde_core::basis::{FreeBasis, MAX_DIMENSION};
use gde_core::energy::RADIUS_MARGIN;
use serde::Deserialize;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Equivalence,
    BoundState,
    Evolve,
    Shift,
    Divergence,
    Crosscheck,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::Equivalence,
        Scenario::BoundState,
        Scenario::Evolve,
        Scenario::Shift,
        Scenario::Divergence,
        Scenario::Crosscheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Equivalence => "equivalence",
            Scenario::BoundState => "bound-state",
            Scenario::Evolve => "evolve",
            Scenario::Shift => "shift",
            Scenario::Divergence => "divergence",
            Scenario::Crosscheck => "crosscheck",
        }
    }

    /// Scenarios that march a kernel on a time grid.
    pub fn uses_time_domain(self) -> bool {
        matches!(self, Scenario::Evolve | Scenario::Crosscheck)
    }

    pub fn uses_interaction(self) -> bool {
        !matches!(self, Scenario::Shift | Scenario::Divergence)
    }

    pub fn uses_self_energy(self) -> bool {
        matches!(self, Scenario::Shift | Scenario::Divergence)
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Scenario::ALL.iter().map(|sc| sc.name()).collect();
                format!("unknown scenario `{s}`; expected one of {}", names.join(", "))
            })
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Free spectrum: either an explicit level list or a uniform ladder rule.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSpec {
    pub energies: Option<Vec<f64>>,
    pub dimension: Option<usize>,
    pub start: Option<f64>,
    pub spacing: Option<f64>,
}

impl BasisSpec {
    pub fn build(&self) -> gde_core::Result<FreeBasis> {
        match &self.energies {
            Some(list) => FreeBasis::new(list.clone()),
            None => FreeBasis::uniform(
                self.dimension.unwrap_or(0),
                self.start.unwrap_or(0.0),
                self.spacing.unwrap_or(0.0),
            ),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionSpec {
    /// "instantaneous", "exponential", or "rank-one".
    pub kind: String,
    /// Frobenius norm of the seeded random Hermitian coupling, as a
    /// fraction of the smallest level gap.
    pub strength: Option<f64>,
    /// Entry-list CSV (row,col,re,im) with the explicit coupling operator,
    /// resolved relative to the config file.
    pub coupling_csv: Option<String>,
    /// Memory time scale; required for "exponential" and optional for
    /// "rank-one".
    pub theta: Option<f64>,
    /// Rank-one coupling strength.
    pub g: Option<f64>,
    /// Rank-one form vector, interleaved re,im pairs.
    pub phi: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    /// Contour start radius in units of the spectral scale.
    pub radius_scale: f64,
    pub contour_points: usize,
    /// Green-line offset as a fraction of the spectral span.
    pub epsilon_scale: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Time grid for the march scenarios.
    pub time_step: f64,
    pub t_max: f64,
    /// Channel label for the bound-state scenario.
    pub level: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            radius_scale: 1e7,
            contour_points: 50,
            epsilon_scale: 1e-3,
            rtol: 1e-9,
            atol: 1e-12,
            time_step: 0.01,
            t_max: 10.0,
            level: 0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelfEnergySpec {
    /// "regulated" or "unregulated".
    pub family: String,
    pub alpha: f64,
    pub mass: f64,
    pub lambda: Option<f64>,
    /// Unperturbed level the shift pipeline runs at.
    pub e0: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Optional echo of the scenario; must agree with the CLI verb when set.
    pub scenario: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub basis: BasisSpec,
    pub interaction: Option<InteractionSpec>,
    #[serde(default)]
    pub solver: SolverSpec,
    pub self_energy: Option<SelfEnergySpec>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<ScenarioConfig, String> {
        toml::from_str(text).map_err(|e| format!("config parse error: {e}"))
    }

    /// Violations statically checkable before execution. Empty iff the
    /// config can be run.
    pub fn validate(&self, scenario: Scenario) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(named) = &self.scenario {
            if named != scenario.name() {
                out.push(format!(
                    "scenario: config names `{named}` but the command asked for `{scenario}`"
                ));
            }
        }
        self.validate_basis(scenario, &mut out);
        self.validate_interaction(scenario, &mut out);
        self.validate_solver(scenario, &mut out);
        self.validate_self_energy(scenario, &mut out);
        out
    }

    fn validate_basis(&self, scenario: Scenario, out: &mut Vec<String>) {
        if !scenario.uses_interaction() {
            return;
        }
        let b = &self.basis;
        match (&b.energies, b.dimension) {
            (Some(_), Some(_)) => {
                out.push("basis: give either `energies` or a ladder rule, not both".into())
            }
            (None, None) => {
                out.push("basis: needs `energies` or `dimension` + `start` + `spacing`".into())
            }
            (Some(list), None) => {
                if list.len() < 2 || list.len() > MAX_DIMENSION {
                    out.push(format!(
                        "basis.energies: {} levels outside the supported 2..={MAX_DIMENSION}",
                        list.len()
                    ));
                }
                if list.iter().any(|e| !e.is_finite()) {
                    out.push("basis.energies: entries must be finite".into());
                }
            }
            (None, Some(dim)) => {
                if !(2..=MAX_DIMENSION).contains(&dim) {
                    out.push(format!(
                        "basis.dimension: {dim} outside the supported 2..={MAX_DIMENSION}"
                    ));
                }
                match b.spacing {
                    Some(s) if s.is_finite() && s > 0.0 => {}
                    _ => out.push("basis.spacing: ladder rule needs a positive spacing".into()),
                }
                if !b.start.is_some_and(f64::is_finite) {
                    out.push("basis.start: ladder rule needs a finite start".into());
                }
            }
        }
    }

    fn validate_interaction(&self, scenario: Scenario, out: &mut Vec<String>) {
        if !scenario.uses_interaction() {
            return;
        }
        let Some(spec) = &self.interaction else {
            out.push(format!("interaction: section required for `{scenario}`"));
            return;
        };
        match spec.kind.as_str() {
            "instantaneous" | "exponential" | "rank-one" => {}
            other => {
                out.push(format!(
                    "interaction.kind: unknown `{other}`; expected instantaneous, exponential, or rank-one"
                ));
                return;
            }
        }
        if scenario == Scenario::Equivalence {
            if spec.kind != "instantaneous" {
                out.push(
                    "interaction.kind: the equivalence scenario compares against the direct \
                     resolvent solve, which needs an instantaneous coupling"
                        .into(),
                );
            }
            if spec.strength.is_some_and(|s| s > 0.3) {
                out.push(
                    "interaction.strength: the equivalence gates are stated for couplings \
                     at most 0.3 of the smallest gap"
                        .into(),
                );
            }
        }
        if let Some(theta) = spec.theta {
            if !theta.is_finite() || theta < 0.0 {
                out.push(format!(
                    "interaction.theta: must be nonnegative and finite, got {theta}"
                ));
            }
        }
        if spec.kind == "exponential" && spec.theta.is_none() {
            out.push("interaction.theta: required for the exponential kind".into());
        }
        if scenario.uses_time_domain() {
            match spec.theta {
                Some(t) if t > 0.0 => {}
                _ => out.push(format!(
                    "interaction.theta: `{scenario}` marches a memory kernel and needs theta > 0"
                )),
            }
        }
        if spec.kind == "rank-one" {
            match spec.g {
                Some(g) if g.is_finite() => {}
                _ => out.push("interaction.g: rank-one coupling must be a finite number".into()),
            }
            match &spec.phi {
                Some(phi) => {
                    if phi.len() < 4 || phi.len() % 2 != 0 {
                        out.push(format!(
                            "interaction.phi: interleaved re,im list needs an even length >= 4, got {}",
                            phi.len()
                        ));
                    }
                    if phi.iter().any(|x| !x.is_finite()) {
                        out.push("interaction.phi: entries must be finite".into());
                    }
                    if let Some(dim) = self.declared_dimension() {
                        if phi.len() != 2 * dim {
                            out.push(format!(
                                "interaction.phi: {} numbers describe {} components, basis has {dim} levels",
                                phi.len(),
                                phi.len() / 2
                            ));
                        }
                    }
                }
                None => out.push("interaction.phi: rank-one kind needs a form vector".into()),
            }
            if spec.strength.is_some() || spec.coupling_csv.is_some() {
                out.push(
                    "interaction: rank-one takes g + phi, not strength or coupling_csv".into(),
                );
            }
        } else {
            match (&spec.strength, &spec.coupling_csv) {
                (Some(s), None) => {
                    if !s.is_finite() || *s <= 0.0 {
                        out.push(format!(
                            "interaction.strength: must be positive and finite, got {s}"
                        ));
                    }
                }
                (None, Some(_)) => {}
                (Some(_), Some(_)) => out.push(
                    "interaction: give either `strength` (seeded random coupling) or `coupling_csv`, not both"
                        .into(),
                ),
                (None, None) => out.push(
                    "interaction: needs `strength` (seeded random coupling) or `coupling_csv`"
                        .into(),
                ),
            }
            if spec.g.is_some() || spec.phi.is_some() {
                out.push("interaction: g and phi apply to the rank-one kind only".into());
            }
        }
    }

    fn validate_solver(&self, scenario: Scenario, out: &mut Vec<String>) {
        let s = &self.solver;
        if !s.radius_scale.is_finite() || s.radius_scale < RADIUS_MARGIN {
            out.push(format!(
                "solver.radius_scale: {} starts the contour inside the boundary regime; \
                 the seed condition T = B holds only at large |z| (rule: radius at least \
                 {RADIUS_MARGIN} spectral scales)",
                s.radius_scale
            ));
        }
        if s.contour_points < 16 {
            out.push(format!(
                "solver.contour_points: sweep needs at least 16 points, got {}",
                s.contour_points
            ));
        }
        if !(s.epsilon_scale.is_finite() && s.epsilon_scale > 0.0 && s.epsilon_scale <= 0.1) {
            out.push(format!(
                "solver.epsilon_scale: must lie in (0, 0.1], got {}",
                s.epsilon_scale
            ));
        }
        for (name, v) in [("rtol", s.rtol), ("atol", s.atol)] {
            if !(v.is_finite() && v > 0.0 && v < 1.0) {
                out.push(format!("solver.{name}: must lie in (0, 1), got {v}"));
            }
        }
        if scenario.uses_time_domain() {
            if !(s.time_step.is_finite() && s.time_step > 0.0) {
                out.push(format!(
                    "solver.time_step: must be positive, got {}",
                    s.time_step
                ));
            } else if !(s.t_max.is_finite() && s.t_max > s.time_step) {
                out.push(format!(
                    "solver.t_max: must exceed the step, got {}",
                    s.t_max
                ));
            } else {
                let ratio = s.t_max / s.time_step;
                if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
                    out.push(format!(
                        "solver.t_max: {} is not an integral number of steps of {}",
                        s.t_max, s.time_step
                    ));
                }
            }
        }
        if let Some(dim) = self.declared_dimension() {
            if scenario == Scenario::BoundState && s.level >= dim {
                out.push(format!(
                    "solver.level: {} does not label a level of a {dim}-dimensional basis",
                    s.level
                ));
            }
        }
    }

    fn validate_self_energy(&self, scenario: Scenario, out: &mut Vec<String>) {
        if !scenario.uses_self_energy() {
            return;
        }
        let Some(spec) = &self.self_energy else {
            out.push(format!("self_energy: section required for `{scenario}`"));
            return;
        };
        match spec.family.as_str() {
            "regulated" => {
                if scenario == Scenario::Divergence {
                    out.push(
                        "self_energy.family: the divergence demonstration needs the unregulated family"
                            .into(),
                    );
                }
                match spec.lambda {
                    Some(l) if l.is_finite() && l > 0.0 => {
                        if spec.mass > 0.0 && l < 10.0 * spec.mass {
                            out.push(format!(
                                "self_energy.lambda: cutoff {l} sits inside the spectral region; needs lambda >= 10 mass"
                            ));
                        }
                    }
                    _ => out.push("self_energy.lambda: regulated family needs a positive cutoff".into()),
                }
            }
            "unregulated" => {
                if scenario == Scenario::Shift {
                    out.push(
                        "self_energy.family: the shift pipeline integrates to the cutoff and needs the regulated family"
                            .into(),
                    );
                }
                if spec.lambda.is_some() {
                    out.push("self_energy.lambda: the unregulated family takes no cutoff".into());
                }
            }
            other => out.push(format!(
                "self_energy.family: unknown `{other}`; expected regulated or unregulated"
            )),
        }
        if scenario == Scenario::Shift
            && !(1e-4..=1e-2).contains(&self.solver.epsilon_scale)
        {
            out.push(format!(
                "solver.epsilon_scale: the contour-jump derivative is contracted for \
                 offsets in [1e-4, 1e-2] masses, got {}",
                self.solver.epsilon_scale
            ));
        }
        if !(spec.alpha.is_finite() && spec.alpha > 0.0) {
            out.push(format!(
                "self_energy.alpha: must be positive, got {}",
                spec.alpha
            ));
        }
        if !(spec.mass.is_finite() && spec.mass > 0.0) {
            out.push(format!(
                "self_energy.mass: must be positive, got {}",
                spec.mass
            ));
        }
        if !spec.e0.is_finite() || spec.e0.abs() >= spec.mass {
            out.push(format!(
                "self_energy.e0: level must sit inside the two-branch window (|e0| < mass), got {}",
                spec.e0
            ));
        }
    }

    fn declared_dimension(&self) -> Option<usize> {
        match (&self.basis.energies, self.basis.dimension) {
            (Some(list), _) => Some(list.len()),
            (None, Some(d)) => Some(d),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> ScenarioConfig {
        ScenarioConfig::from_toml(text).unwrap()
    }

    #[test]
    fn defaults_fill_in() {
        let cfg = parse("[basis]\nenergies = [0.0, 1.0]");
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.solver.radius_scale, 1e7);
        assert_eq!(cfg.solver.contour_points, 50);
        assert!(cfg.scenario.is_none());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ScenarioConfig::from_toml("[solver]\nradius = 5.0").is_err());
    }

    #[test]
    fn basis_needs_exactly_one_description() {
        let both = parse(
            "[basis]\nenergies = [0.0, 1.0]\ndimension = 2\n\n[interaction]\nkind = \"instantaneous\"\nstrength = 0.2",
        );
        assert!(both
            .validate(Scenario::BoundState)
            .iter()
            .any(|v| v.contains("not both")));

        let neither = parse("[interaction]\nkind = \"instantaneous\"\nstrength = 0.2");
        assert!(neither
            .validate(Scenario::BoundState)
            .iter()
            .any(|v| v.starts_with("basis:")));
    }

    #[test]
    fn negative_theta_names_the_field() {
        let cfg = parse(
            "[basis]\nenergies = [0.0, 1.0]\n\n[interaction]\nkind = \"exponential\"\nstrength = 0.2\ntheta = -1.0",
        );
        let violations = cfg.validate(Scenario::BoundState);
        assert_eq!(
            violations
                .iter()
                .filter(|v| v.starts_with("interaction.theta"))
                .count(),
            1,
            "{violations:?}"
        );
    }

    #[test]
    fn contour_inside_the_spectrum_cites_the_boundary_rule() {
        let cfg = parse(
            "[basis]\nenergies = [0.0, 1.0]\n\n[interaction]\nkind = \"instantaneous\"\nstrength = 0.2\n\n[solver]\nradius_scale = 2.0",
        );
        let violations = cfg.validate(Scenario::BoundState);
        assert!(
            violations.iter().any(|v| v.contains("boundary regime")),
            "{violations:?}"
        );
    }

    #[test]
    fn time_scenarios_need_memory_and_an_integral_grid() {
        let local = parse(
            "[basis]\nenergies = [0.0, 1.0]\n\n[interaction]\nkind = \"instantaneous\"\nstrength = 0.2",
        );
        assert!(local
            .validate(Scenario::Evolve)
            .iter()
            .any(|v| v.contains("theta > 0")));

        let ragged = parse(
            "[basis]\nenergies = [0.0, 1.0]\n\n[interaction]\nkind = \"rank-one\"\ng = 0.05\ntheta = 0.1\nphi = [1.0, 0.0, 1.0, 0.0]\n\n[solver]\ntime_step = 0.3\nt_max = 1.0",
        );
        assert!(ragged
            .validate(Scenario::Evolve)
            .iter()
            .any(|v| v.contains("integral number of steps")));
    }

    #[test]
    fn shift_and_divergence_require_matching_families() {
        let wrong = parse(
            "[self_energy]\nfamily = \"unregulated\"\nalpha = 0.001\nmass = 1.0\ne0 = 0.5",
        );
        assert!(wrong
            .validate(Scenario::Shift)
            .iter()
            .any(|v| v.contains("regulated family")));

        let cut = parse(
            "[self_energy]\nfamily = \"regulated\"\nalpha = 0.001\nmass = 1.0\nlambda = 50.0\ne0 = 0.5",
        );
        assert!(cut
            .validate(Scenario::Divergence)
            .iter()
            .any(|v| v.contains("unregulated family")));
        assert!(cut.validate(Scenario::Shift).is_empty());
    }

    #[test]
    fn rank_one_phi_length_must_match_the_basis() {
        let cfg = parse(
            "[basis]\nenergies = [0.0, 1.0, 2.0]\n\n[interaction]\nkind = \"rank-one\"\ng = 0.05\nphi = [1.0, 0.0, 1.0, 0.0]",
        );
        assert!(cfg
            .validate(Scenario::BoundState)
            .iter()
            .any(|v| v.starts_with("interaction.phi")));
    }

    #[test]
    fn scenario_names_round_trip() {
        for sc in Scenario::ALL {
            assert_eq!(sc.name().parse::<Scenario>().unwrap(), sc);
        }
        assert!("laplace".parse::<Scenario>().is_err());
    }
}
