//! Seeded random generator of small, well-typed programs for property tests.

use std::collections::BTreeMap;
use std::fmt::Write;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::frontend::parse_str;
use crate::mir::Program;

#[derive(Clone, Debug)]
pub struct GenConfig {
    pub max_classes: usize,
    pub max_interfaces: usize,
    pub max_methods: usize,
    pub max_stmts: usize,
    /// Allow reflective instantiation (`mkref`).
    pub allow_mkref: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_classes: 4,
            max_interfaces: 2,
            max_methods: 3,
            max_stmts: 12,
            allow_mkref: false,
        }
    }
}

/// Seed from `OA_SEED` when set, else `default`.
pub fn seed_from_env(default: u64) -> u64 {
    std::env::var("OA_SEED")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(default)
}

/// Method signature shared by every class defining the name.
#[derive(Clone, Debug)]
struct Sig {
    name: String,
    param: Option<String>,
}

#[derive(Clone, Debug)]
struct ClassPlan {
    name: String,
    superclass: Option<usize>,
    interface: Option<usize>,
    fields: Vec<(String, String)>,
    statics: Vec<(String, String)>,
    methods: Vec<usize>,
}

struct Gen<'c> {
    rng: ChaCha8Rng,
    cfg: &'c GenConfig,
    sigs: Vec<Sig>,
    interfaces: Vec<(String, Vec<usize>)>,
    classes: Vec<ClassPlan>,
    out: String,
    next_local: usize,
}

type Env = Vec<(String, String)>;

impl Gen<'_> {
    fn is_class(&self, t: &str) -> Option<usize> {
        self.classes.iter().position(|c| c.name == t)
    }

    fn supertypes(&self, ci: usize) -> Vec<String> {
        let mut out = Vec::new();
        let mut cur = Some(ci);
        while let Some(i) = cur {
            out.push(self.classes[i].name.clone());
            if let Some(it) = self.classes[i].interface {
                out.push(self.interfaces[it].0.clone());
            }
            cur = self.classes[i].superclass;
        }
        out
    }

    fn subtype(&self, sub: &str, sup: &str) -> bool {
        if sub == sup {
            return true;
        }
        match self.is_class(sub) {
            Some(ci) => self.supertypes(ci).iter().any(|t| t == sup),
            None => false,
        }
    }

    fn reference_types(&self) -> Vec<String> {
        self.classes
            .iter()
            .map(|c| c.name.clone())
            .chain(self.interfaces.iter().map(|i| i.0.clone()))
            .collect()
    }

    /// Methods callable on a receiver of static type `t`.
    fn callable(&self, t: &str) -> Vec<usize> {
        if let Some(ci) = self.is_class(t) {
            let mut v = Vec::new();
            let mut cur = Some(ci);
            while let Some(i) = cur {
                v.extend(self.classes[i].methods.iter().copied());
                if let Some(it) = self.classes[i].interface {
                    v.extend(self.interfaces[it].1.iter().copied());
                }
                cur = self.classes[i].superclass;
            }
            v.sort_unstable();
            v.dedup();
            v
        } else if let Some((_, ms)) = self.interfaces.iter().find(|i| i.0 == t) {
            ms.clone()
        } else {
            Vec::new()
        }
    }

    /// Instance fields visible on class `ci`, with declared types.
    fn fields_of(&self, ci: usize) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut cur = Some(ci);
        while let Some(i) = cur {
            out.extend(self.classes[i].fields.iter().cloned());
            cur = self.classes[i].superclass;
        }
        out
    }

    fn fresh(&mut self) -> String {
        self.next_local += 1;
        format!("v{}", self.next_local)
    }

    fn marker(&mut self) -> &'static str {
        match self.rng.random_range(0..10) {
            0..=1 => " @L",
            2..=3 => " @R",
            _ => "",
        }
    }

    fn line(&mut self, depth: usize, text: &str) {
        let m = self.marker();
        let _ = writeln!(self.out, "{}{text}{m};", "  ".repeat(depth));
    }

    /// Locals of `env` whose type is a subtype of `t`.
    fn of_type(&self, env: &Env, t: &str) -> Vec<String> {
        env.iter()
            .filter(|(_, ty)| self.subtype(ty, t))
            .map(|(n, _)| n.clone())
            .collect()
    }

    fn stmts(&mut self, env: &mut Env, depth: usize, budget: &mut usize, in_main: bool) {
        while *budget > 0 {
            *budget -= 1;
            let choice = self.rng.random_range(0..14);
            let refs: Vec<(String, String)> = env
                .iter()
                .filter(|(_, t)| t != "int" && !t.ends_with("[]"))
                .cloned()
                .collect();
            match choice {
                0 | 1 => {
                    let ci = self.rng.random_range(0..self.classes.len());
                    let name = self.classes[ci].name.clone();
                    let v = self.fresh();
                    self.line(depth, &format!("{v} = new {name}()"));
                    env.push((v, name));
                }
                2 => {
                    let Some((src, t)) = refs.choose(&mut self.rng).cloned() else {
                        continue;
                    };
                    let v = self.fresh();
                    self.line(depth, &format!("{v} = {src}"));
                    env.push((v, t));
                }
                3 | 4 => {
                    let Some((base, t)) = refs.choose(&mut self.rng).cloned() else {
                        continue;
                    };
                    let Some(ci) = self.is_class(&t) else {
                        continue;
                    };
                    let fields = self.fields_of(ci);
                    let Some((f, ft)) = fields.choose(&mut self.rng).cloned() else {
                        continue;
                    };
                    if ft == "int" {
                        let k = self.rng.random_range(0..5);
                        self.line(depth, &format!("{base}.{f} = {k}"));
                    } else {
                        let Some(src) = self.of_type(env, &ft).choose(&mut self.rng).cloned()
                        else {
                            continue;
                        };
                        self.line(depth, &format!("{base}.{f} = {src}"));
                    }
                }
                5 => {
                    let Some((base, t)) = refs.choose(&mut self.rng).cloned() else {
                        continue;
                    };
                    let Some(ci) = self.is_class(&t) else {
                        continue;
                    };
                    let fields = self.fields_of(ci);
                    let Some((f, ft)) = fields.choose(&mut self.rng).cloned() else {
                        continue;
                    };
                    let v = self.fresh();
                    self.line(depth, &format!("{v} = {base}.{f}"));
                    env.push((v, ft));
                }
                6 | 7 => {
                    let Some((recv, t)) = refs.choose(&mut self.rng).cloned() else {
                        continue;
                    };
                    let ms = self.callable(&t);
                    let Some(&mi) = ms.choose(&mut self.rng) else {
                        continue;
                    };
                    let sig = self.sigs[mi].clone();
                    let arg = match &sig.param {
                        None => String::new(),
                        Some(pt) if pt == "int" => self.rng.random_range(0..5).to_string(),
                        Some(pt) => match self.of_type(env, pt).choose(&mut self.rng) {
                            Some(a) => a.clone(),
                            None => continue,
                        },
                    };
                    self.line(depth, &format!("call {recv}.{}({arg})", sig.name));
                }
                8 => {
                    let ops: Vec<String> = env.iter().map(|(n, _)| n.clone()).collect();
                    let a = ops
                        .choose(&mut self.rng)
                        .cloned()
                        .unwrap_or_else(|| "1".into());
                    let v = self.fresh();
                    self.line(depth, &format!("{v} = op({a})"));
                    env.push((v, "int".into()));
                }
                9 => {
                    let ci = self.rng.random_range(0..self.classes.len());
                    let statics = self.classes[ci].statics.clone();
                    let Some((f, ft)) = statics.choose(&mut self.rng).cloned() else {
                        continue;
                    };
                    let cname = self.classes[ci].name.clone();
                    if self.rng.random_bool(0.5) {
                        let src = if ft == "int" {
                            Some(self.rng.random_range(0..5).to_string())
                        } else {
                            self.of_type(env, &ft).choose(&mut self.rng).cloned()
                        };
                        let Some(src) = src else { continue };
                        self.line(depth, &format!("{cname}::{f} = {src}"));
                    } else {
                        let v = self.fresh();
                        self.line(depth, &format!("{v} = {cname}::{f}"));
                        env.push((v, ft));
                    }
                }
                10 => {
                    let types = self.reference_types();
                    let et = types
                        .choose(&mut self.rng)
                        .cloned()
                        .expect("at least one class");
                    let arrays: Vec<(String, String)> = env
                        .iter()
                        .filter(|(_, t)| t.ends_with("[]"))
                        .cloned()
                        .collect();
                    match (
                        arrays.choose(&mut self.rng).cloned(),
                        self.rng.random_range(0..3),
                    ) {
                        (Some((arr, at)), 0) => {
                            let elem = at.trim_end_matches("[]").to_string();
                            let Some(src) = self.of_type(env, &elem).choose(&mut self.rng).cloned()
                            else {
                                continue;
                            };
                            let i = self.rng.random_range(0..2);
                            self.line(depth, &format!("{arr}[{i}] = {src}"));
                        }
                        (Some((arr, at)), 1) => {
                            let v = self.fresh();
                            let i = self.rng.random_range(0..2);
                            self.line(depth, &format!("{v} = {arr}[{i}]"));
                            env.push((v, at.trim_end_matches("[]").to_string()));
                        }
                        _ => {
                            let v = self.fresh();
                            self.line(depth, &format!("{v} = newarr {et} 2"));
                            env.push((v, format!("{et}[]")));
                        }
                    }
                }
                11 if depth < 3 && *budget >= 3 => {
                    let c = self.fresh();
                    let k = self.rng.random_range(0..2);
                    self.line(depth, &format!("{c} = {k}"));
                    *budget -= 1;
                    env.push((c.clone(), "int".into()));
                    let pad = "  ".repeat(depth);
                    let _ = writeln!(self.out, "{pad}if {c} {{");
                    let mut inner = *budget / 2;
                    *budget -= inner;
                    let mut then_env = env.clone();
                    self.stmts(&mut then_env, depth + 1, &mut inner, in_main);
                    let _ = writeln!(self.out, "{pad}}} else {{");
                    let mut inner = (*budget).min(2);
                    *budget -= inner;
                    let mut else_env = env.clone();
                    self.stmts(&mut else_env, depth + 1, &mut inner, in_main);
                    let _ = writeln!(self.out, "{pad}}}");
                }
                12 if depth < 3 && *budget >= 3 => {
                    let c = self.fresh();
                    self.line(depth, &format!("{c} = 0"));
                    *budget -= 1;
                    env.push((c.clone(), "int".into()));
                    let pad = "  ".repeat(depth);
                    let _ = writeln!(self.out, "{pad}while {c} {{");
                    let mut inner = (*budget).min(3);
                    *budget -= inner;
                    let mut body_env = env.clone();
                    self.stmts(&mut body_env, depth + 1, &mut inner, in_main);
                    let _ = writeln!(self.out, "{pad}}}");
                }
                13 if self.cfg.allow_mkref && in_main => {
                    let types = self.reference_types();
                    let t = types
                        .choose(&mut self.rng)
                        .cloned()
                        .expect("at least one class");
                    let v = self.fresh();
                    self.line(depth, &format!("{v} = mkref {t}"));
                    env.push((v, t));
                }
                _ => {
                    let v = self.fresh();
                    let k = self.rng.random_range(0..9);
                    self.line(depth, &format!("{v} = {k}"));
                    env.push((v, "int".into()));
                }
            }
        }
    }

    fn plan(&mut self) {
        let n_sigs = 3;
        let types_later = |g: &mut Self| -> String {
            let mut pool: Vec<String> = vec!["int".into()];
            pool.extend(g.reference_types());
            pool.choose(&mut g.rng).cloned().unwrap()
        };
        let n_if = self.rng.random_range(0..=self.cfg.max_interfaces);
        let n_cls = self
            .rng
            .random_range(1..=self.cfg.max_classes.saturating_sub(1).max(1));
        for i in 0..n_cls {
            let superclass =
                (i > 0 && self.rng.random_bool(0.4)).then(|| self.rng.random_range(0..i));
            self.classes.push(ClassPlan {
                name: format!("C{i}"),
                superclass,
                interface: None,
                fields: Vec::new(),
                statics: Vec::new(),
                methods: Vec::new(),
            });
        }
        for i in 0..n_if {
            self.interfaces.push((format!("I{i}"), Vec::new()));
        }
        for i in 0..n_sigs {
            let param = match self.rng.random_range(0..3) {
                0 => None,
                _ => Some(types_later(self)),
            };
            self.sigs.push(Sig {
                name: format!("m{i}"),
                param,
            });
        }
        for i in 0..n_if {
            let k = self.rng.random_range(1..=2);
            let ms: Vec<usize> = (0..n_sigs).collect();
            let picked: Vec<usize> = ms.choose_multiple(&mut self.rng, k).copied().collect();
            self.interfaces[i].1 = picked;
        }
        for ci in 0..n_cls {
            if n_if > 0 && self.rng.random_bool(0.6) {
                let it = self.rng.random_range(0..n_if);
                self.classes[ci].interface = Some(it);
                self.classes[ci].methods = self.interfaces[it].1.clone();
            }
            let extra = self.rng.random_range(0..=self.cfg.max_methods);
            for _ in 0..extra {
                let m = self.rng.random_range(0..n_sigs);
                if self.classes[ci].methods.len() < self.cfg.max_methods
                    && !self.classes[ci].methods.contains(&m)
                {
                    self.classes[ci].methods.push(m);
                }
            }
            self.classes[ci].methods.sort_unstable();
            let nf = self.rng.random_range(1..=2);
            for f in 0..nf {
                let t = types_later(self);
                self.classes[ci].fields.push((format!("f{ci}_{f}"), t));
            }
            if self.rng.random_bool(0.3) {
                let t = types_later(self);
                self.classes[ci].statics.push((format!("s{ci}"), t));
            }
        }
    }

    fn emit(&mut self) {
        for (name, ms) in self.interfaces.clone() {
            let _ = writeln!(self.out, "interface {name} {{");
            for m in ms {
                let s = &self.sigs[m];
                let params = if s.param.is_some() { "p" } else { "" };
                let _ = writeln!(self.out, "  method {}({params});", s.name);
            }
            let _ = writeln!(self.out, "}}");
        }
        for ci in 0..self.classes.len() {
            let c = self.classes[ci].clone();
            let _ = write!(self.out, "class {}", c.name);
            if let Some(s) = c.superclass {
                let _ = write!(self.out, " extends {}", self.classes[s].name);
            }
            if let Some(i) = c.interface {
                let _ = write!(self.out, " implements {}", self.interfaces[i].0);
            }
            let _ = writeln!(self.out, " {{");
            for (f, t) in &c.fields {
                let _ = writeln!(self.out, "  field {f}: {t};");
            }
            for (f, t) in &c.statics {
                let _ = writeln!(self.out, "  field static {f}: {t};");
            }
            for &m in &c.methods {
                let sig = self.sigs[m].clone();
                let mut env: Env = vec![("this".into(), c.name.clone())];
                let params = match &sig.param {
                    Some(t) => {
                        env.push(("p".into(), t.clone()));
                        "p"
                    }
                    None => "",
                };
                let _ = writeln!(self.out, "  method {}({params}) {{", sig.name);
                let mut budget = self.rng.random_range(1..=self.cfg.max_stmts);
                self.stmts(&mut env, 2, &mut budget, false);
                let _ = writeln!(self.out, "  }}");
            }
            let _ = writeln!(self.out, "}}");
        }
        let _ = writeln!(self.out, "class Main {{");
        let _ = writeln!(self.out, "  static method main() {{");
        let mut env: Env = Vec::new();
        let mut budget = self.cfg.max_stmts;
        self.stmts(&mut env, 2, &mut budget, true);
        let _ = writeln!(self.out, "  }}");
        let _ = writeln!(self.out, "}}");
    }
}

/// Source text of a random program with a static `Main.main`.
pub fn generate_source(seed: u64, cfg: &GenConfig) -> String {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        cfg,
        sigs: Vec::new(),
        interfaces: Vec::new(),
        classes: Vec::new(),
        out: String::new(),
        next_local: 0,
    };
    g.plan();
    g.emit();
    g.out
}

pub fn generate_program(seed: u64, cfg: &GenConfig) -> Result<Program> {
    parse_str(&format!("gen{seed}.mir"), &generate_source(seed, cfg))
}

/// Counts of declarations, for checking the size bounds.
pub fn shape(p: &Program) -> BTreeMap<&'static str, usize> {
    let max_methods = p
        .classes
        .iter()
        .filter(|c| c.name != "Main")
        .map(|c| c.methods.len())
        .max()
        .unwrap_or(0);
    let max_stmts = p
        .methods()
        .map(|(_, m)| m.statements().count())
        .max()
        .unwrap_or(0);
    BTreeMap::from([
        ("classes", p.classes.len()),
        ("interfaces", p.interfaces.len()),
        ("methods_per_class", max_methods),
        ("stmts_per_method", max_stmts),
    ])
}
