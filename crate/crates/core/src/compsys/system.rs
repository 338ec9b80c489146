use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};

/// One class of the equivalence on 𝒫: its member subsets of `[m]` (0-based,
/// sorted) and the shared probability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PClass {
    pub members: Vec<Vec<usize>>,
    pub p: f64,
}

/// A family `F` of injections `[m] → [n]` with relation classes drawn over
/// the image sets `f(u)`. Elements are 0-based internally; the text format
/// is 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct System {
    m: usize,
    n: usize,
    functions: Vec<Vec<u32>>,
    classes: Vec<PClass>,
    /// Flattened 𝒫: (class, member subset).
    members: Vec<(usize, Vec<usize>)>,
    /// Distinct image sets per class, sorted.
    sets: Vec<Vec<Vec<u32>>>,
    /// `slots[f][j]`: index of `f(members[j])` in `sets[class of j]`.
    slots: Vec<Vec<usize>>,
    /// Functions whose range contains each element.
    occurs: Vec<Vec<usize>>,
}

impl System {
    pub fn new(m: usize, n: usize, functions: Vec<Vec<u32>>, classes: Vec<PClass>) -> Result<Self> {
        if m == 0 || n < m {
            return Err(Error::invalid(format!("need 1 <= m <= n, got m = {m}, n = {n}")));
        }
        if functions.is_empty() {
            return Err(Error::invalid("the family F is empty"));
        }
        for (i, f) in functions.iter().enumerate() {
            if f.len() != m {
                return Err(Error::invalid(format!("function {} has {} values, expected {m}", i + 1, f.len())));
            }
            if f.iter().any(|&x| x as usize >= n) {
                return Err(Error::invalid(format!("function {} leaves [n]", i + 1)));
            }
            if (0..m).any(|a| f[a + 1..].contains(&f[a])) {
                return Err(Error::invalid(format!("function {} is not one-to-one", i + 1)));
            }
        }
        let mut sorted = functions.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("F lists a function twice"));
        }
        if classes.is_empty() {
            return Err(Error::invalid("𝒫 is empty"));
        }
        let mut members = Vec::new();
        let mut classes = classes;
        for (c, class) in classes.iter_mut().enumerate() {
            if !(class.p > 0.0 && class.p < 1.0) {
                return Err(Error::invalid(format!("class {} has probability {} outside (0,1)", c + 1, class.p)));
            }
            if class.members.is_empty() {
                return Err(Error::invalid(format!("class {} has no members", c + 1)));
            }
            for u in &mut class.members {
                u.sort_unstable();
                u.dedup();
                if u.is_empty() || u.iter().any(|&a| a >= m) {
                    return Err(Error::invalid(format!("class {} has a member that is not a nonempty subset of [m]", c + 1)));
                }
                members.push((c, u.clone()));
            }
        }
        let mut seen: Vec<&Vec<usize>> = members.iter().map(|(_, u)| u).collect();
        seen.sort();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("a subset appears twice in 𝒫"));
        }
        let image = |f: &[u32], u: &[usize]| -> Vec<u32> {
            let mut v: Vec<u32> = u.iter().map(|&a| f[a]).collect();
            v.sort_unstable();
            v
        };
        let mut sets: Vec<Vec<Vec<u32>>> = vec![Vec::new(); classes.len()];
        for f in &functions {
            for (c, u) in &members {
                sets[*c].push(image(f, u));
            }
        }
        for s in &mut sets {
            s.sort_unstable();
            s.dedup();
        }
        let slots = functions
            .iter()
            .map(|f| {
                members
                    .iter()
                    .map(|(c, u)| sets[*c].binary_search(&image(f, u)).expect("image was indexed"))
                    .collect()
            })
            .collect();
        let mut occurs = vec![Vec::new(); n];
        for (i, f) in functions.iter().enumerate() {
            for &x in f {
                occurs[x as usize].push(i);
            }
        }
        Ok(System {
            m,
            n,
            functions,
            classes,
            members,
            sets,
            slots,
            occurs,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn functions(&self) -> &[Vec<u32>] {
        &self.functions
    }

    pub fn classes(&self) -> &[PClass] {
        &self.classes
    }

    /// 𝒫 flattened in class order: `(class, subset)`.
    pub fn members(&self) -> &[(usize, Vec<usize>)] {
        &self.members
    }

    /// The distinct image sets `R_{u/e}` of a class.
    pub fn class_sets(&self, class: usize) -> &[Vec<u32>] {
        &self.sets[class]
    }

    pub(crate) fn slots(&self, f: usize) -> &[usize] {
        &self.slots[f]
    }

    pub(crate) fn occurrences(&self, x: u32) -> &[usize] {
        &self.occurs[x as usize]
    }

    /// Functions sharing at least one value with `f`, excluding `f`.
    pub fn overlapping(&self, f: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.functions[f]
            .iter()
            .flat_map(|&x| self.occurs[x as usize].iter().copied())
            .filter(|&g| g != f)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn has_disjoint_ranges(&self) -> bool {
        self.occurs.iter().all(|o| o.len() <= 1)
    }

    /// `q_X` for `X` given as indices into [`System::members`].
    pub fn q_weight(&self, x: &[usize]) -> Result<f64> {
        if let Some(&j) = x.iter().find(|&&j| j >= self.members.len()) {
            return Err(Error::invalid(format!("member index {j} outside 𝒫")));
        }
        Ok(self
            .members
            .iter()
            .enumerate()
            .map(|(j, (c, _))| {
                let p = self.classes[*c].p;
                if x.contains(&j) {
                    p
                } else {
                    1.0 - p
                }
            })
            .product())
    }

    /// `q_∅`.
    pub fn q_empty(&self) -> f64 {
        self.members.iter().map(|(c, _)| 1.0 - self.classes[*c].p).product()
    }

    /// `q_𝒫`, the chance that one given function is chosen.
    pub fn q_full(&self) -> f64 {
        self.members.iter().map(|(c, _)| self.classes[*c].p).product()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("m {}\nn {}\n", self.m, self.n);
        for f in &self.functions {
            let vals: Vec<String> = f.iter().map(|x| (x + 1).to_string()).collect();
            writeln!(s, "f {}", vals.join(" ")).unwrap();
        }
        for c in &self.classes {
            let us: Vec<String> = c
                .members
                .iter()
                .map(|u| {
                    let v: Vec<String> = u.iter().map(|a| (a + 1).to_string()).collect();
                    format!("{{{}}}", v.join(","))
                })
                .collect();
            writeln!(s, "class {} {}", c.p, us.join(" ")).unwrap();
        }
        s
    }

    /// Parse the line format written by [`System::to_text`]. Blank lines and
    /// `#` comments are ignored.
    pub fn parse(src: &str) -> Result<Self> {
        let mut m = None;
        let mut n = None;
        let mut functions = Vec::new();
        let mut classes = Vec::new();
        for (i, raw) in src.lines().enumerate() {
            let line = i + 1;
            let text = raw.split('#').next().unwrap_or("");
            let trimmed = text.trim_start();
            if trimmed.is_empty() {
                continue;
            }
            let col0 = text.len() - trimmed.len() + 1;
            let (key, rest) = trimmed.split_once(char::is_whitespace).unwrap_or((trimmed, ""));
            let rest_col = col0 + key.len() + 1;
            let num = |tok: &str, col: usize| -> Result<usize> {
                tok.parse::<usize>()
                    .map_err(|_| Error::parse(line, col, format!("expected a positive integer, found `{tok}`")))
            };
            match key {
                "m" | "n" => {
                    let v = num(rest.trim(), rest_col)?;
                    if key == "m" {
                        m = Some(v);
                    } else {
                        n = Some(v);
                    }
                }
                "f" => {
                    let mut vals = Vec::new();
                    for (col, tok) in tokens(rest, rest_col) {
                        let v = num(tok, col)?;
                        if v == 0 {
                            return Err(Error::parse(line, col, "values are 1-based"));
                        }
                        vals.push((v - 1) as u32);
                    }
                    functions.push(vals);
                }
                "class" => {
                    let mut toks = tokens(rest, rest_col).into_iter();
                    let (pcol, ptok) = toks.next().ok_or_else(|| Error::parse(line, rest_col, "missing probability"))?;
                    let p: f64 = ptok
                        .parse()
                        .map_err(|_| Error::parse(line, pcol, format!("expected a probability, found `{ptok}`")))?;
                    let mut members = Vec::new();
                    for (col, tok) in toks {
                        let inner = tok
                            .strip_prefix('{')
                            .and_then(|t| t.strip_suffix('}'))
                            .ok_or_else(|| Error::parse(line, col, format!("expected a subset like {{1,2}}, found `{tok}`")))?;
                        let mut u = Vec::new();
                        for a in inner.split(',') {
                            let v = num(a.trim(), col)?;
                            if v == 0 {
                                return Err(Error::parse(line, col, "positions are 1-based"));
                            }
                            u.push(v - 1);
                        }
                        members.push(u);
                    }
                    classes.push(PClass { members, p });
                }
                other => return Err(Error::parse(line, col0, format!("unknown directive `{other}`"))),
            }
        }
        let m = m.ok_or_else(|| Error::parse(1, 1, "missing `m` line"))?;
        let n = n.ok_or_else(|| Error::parse(1, 1, "missing `n` line"))?;
        System::new(m, n, functions, classes)
    }
}

fn tokens(s: &str, col0: usize) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in s.char_indices().chain(std::iter::once((s.len(), ' '))) {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(b)) => {
                out.push((col0 + b, &s[b..i]));
                start = None;
            }
            _ => {}
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Separativity {
    None,
    WeaklySeparative,
    SemiSeparative,
    Separative,
}

impl Separativity {
    pub fn as_str(self) -> &'static str {
        match self {
            Separativity::None => "none",
            Separativity::WeaklySeparative => "weakly_separative",
            Separativity::SemiSeparative => "semi_separative",
            Separativity::Separative => "separative",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparativityReport {
    pub level: Separativity,
    /// Classes of the finest admissible `e*` on `[m]` (0-based).
    pub e_star: Vec<Vec<usize>>,
    /// One message per failed clause.
    pub failures: Vec<String>,
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut y = x;
    while parent[y] != r {
        let next = parent[y];
        parent[y] = r;
        y = next;
    }
    r
}

fn set_text(u: &[usize]) -> String {
    let v: Vec<String> = u.iter().map(|a| (a + 1).to_string()).collect();
    format!("{{{}}}", v.join(","))
}

/// The strongest separativity level of `sys`, with the clauses that fail.
///
/// Clause (iii) forces `m₁ e* m₂` whenever `f₁(m₁) = f₂(m₂)`; the finest
/// such `e*` always admits an `e′`, and refining `e*` only helps (i) and
/// (ii), so it is the one tested.
pub fn separativity(sys: &System) -> SeparativityReport {
    let m = sys.m;
    let mut failures = Vec::new();
    let mut parent: Vec<usize> = (0..m).collect();
    let mut first_cross: Option<(usize, usize, usize, usize)> = None;
    let mut owner: HashMap<u32, (usize, usize)> = HashMap::new();
    for (i, f) in sys.functions.iter().enumerate() {
        for (a, &x) in f.iter().enumerate() {
            match owner.get(&x) {
                Some(&(j, b)) => {
                    if a != b && first_cross.is_none() {
                        first_cross = Some((j, b, i, a));
                    }
                    let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                    parent[ra] = rb;
                }
                None => {
                    owner.insert(x, (i, a));
                }
            }
        }
    }
    let separative = first_cross.is_none();
    if let Some((j, b, i, a)) = first_cross {
        failures.push(format!("separative: f{}({}) = f{}({})", j + 1, b + 1, i + 1, a + 1));
    }
    let root: Vec<usize> = (0..m).map(|a| find(&mut parent, a)).collect();
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for a in 0..m {
        groups.entry(root[a]).or_default().push(a);
    }
    let e_star: Vec<Vec<usize>> = groups.into_values().collect();

    let mut weak = true;
    for (_, u) in &sys.members {
        if let Some((a, b)) = u
            .iter()
            .enumerate()
            .find_map(|(i, &a)| u[i + 1..].iter().find(|&&b| root[a] == root[b]).map(|&b| (a, b)))
        {
            failures.push(format!(
                "clause (i): member {} has e*-equivalent positions {} and {}",
                set_text(u),
                a + 1,
                b + 1
            ));
            weak = false;
            break;
        }
    }
    let hit = |u: &[usize]| -> Vec<usize> {
        let mut h: Vec<usize> = u.iter().map(|&a| root[a]).collect();
        h.sort_unstable();
        h.dedup();
        h
    };
    'ii: for (i, (c1, u1)) in sys.members.iter().enumerate() {
        for (c2, u2) in &sys.members[i + 1..] {
            if c1 != c2 && hit(u1) == hit(u2) {
                failures.push(format!(
                    "clause (ii): members {} and {} meet the same e*-classes but lie in different classes",
                    set_text(u1),
                    set_text(u2)
                ));
                weak = false;
                break 'ii;
            }
        }
    }

    let mut semi = weak;
    let mut by_image: HashMap<Vec<u32>, Vec<(usize, usize)>> = HashMap::new();
    for (fi, f) in sys.functions.iter().enumerate() {
        for (j, (_, u)) in sys.members.iter().enumerate() {
            let mut img: Vec<u32> = u.iter().map(|&a| f[a]).collect();
            img.sort_unstable();
            by_image.entry(img).or_default().push((fi, j));
        }
    }
    let mut clause_iv: Option<String> = None;
    for group in by_image.values() {
        let (f1, j1) = group[0];
        for &(f2, j2) in &group[1..] {
            let (c1, u1) = &sys.members[j1];
            let (c2, u2) = &sys.members[j2];
            let same = c1 == c2 && u1 == u2 && u1.iter().all(|&a| sys.functions[f1][a] == sys.functions[f2][a]);
            if !same {
                let msg = format!(
                    "clause (iv): f{}{} = f{}{} as sets but the restrictions differ",
                    f1 + 1,
                    set_text(u1),
                    f2 + 1,
                    set_text(u2)
                );
                if clause_iv.as_ref().is_none_or(|old| msg < *old) {
                    clause_iv = Some(msg);
                }
            }
        }
    }
    if let Some(msg) = clause_iv {
        failures.push(msg);
        semi = false;
    }
    let level = if separative && semi {
        Separativity::Separative
    } else if semi {
        Separativity::SemiSeparative
    } else if weak {
        Separativity::WeaklySeparative
    } else {
        Separativity::None
    };
    SeparativityReport { level, e_star, failures }
}

pub fn separativity_level(sys: &System) -> Separativity {
    separativity(sys).level
}

pub(crate) fn require_weakly_separative(sys: &System) -> Result<()> {
    let r = separativity(sys);
    if r.level >= Separativity::WeaklySeparative {
        Ok(())
    } else {
        let clause = r
            .failures
            .iter()
            .find(|f| f.starts_with("clause (i)") || f.starts_with("clause (ii)"))
            .cloned()
            .unwrap_or_default();
        Err(Error::Hypothesis(format!("system is not weakly separative; {clause}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(m: usize, n: usize, f: &[&[u32]], classes: &[(&[&[usize]], f64)]) -> System {
        System::new(
            m,
            n,
            f.iter().map(|v| v.to_vec()).collect(),
            classes
                .iter()
                .map(|(us, p)| PClass {
                    members: us.iter().map(|u| u.to_vec()).collect(),
                    p: *p,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn q_weights() {
        let s = sys(2, 4, &[&[0, 1], &[2, 3]], &[(&[&[0]], 0.1), (&[&[1]], 0.1)]);
        assert!((s.q_weight(&[0]).unwrap() - 0.09).abs() < 1e-15);
        assert!((s.q_weight(&[]).unwrap() - 0.81).abs() < 1e-15);
        assert!((s.q_weight(&[0, 1]).unwrap() - 0.01).abs() < 1e-15);
        let total: f64 = [vec![], vec![0], vec![1], vec![0, 1]]
            .iter()
            .map(|x| s.q_weight(x).unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn disjoint_is_separative() {
        let s = sys(2, 6, &[&[0, 1], &[2, 3], &[4, 5]], &[(&[&[0, 1]], 0.5)]);
        assert_eq!(separativity_level(&s), Separativity::Separative);
    }

    #[test]
    fn crossing_pair_levels() {
        // f1 = (1,2), f2 = (2,3): forced e* joins positions 1 and 2.
        let f: &[&[u32]] = &[&[0, 1], &[1, 2]];
        let joined = sys(2, 3, f, &[(&[&[0], &[1]], 0.5)]);
        let r = separativity(&joined);
        assert_eq!(r.level, Separativity::WeaklySeparative);
        assert_eq!(r.e_star, vec![vec![0, 1]]);
        assert!(r.failures.iter().any(|m| m.starts_with("clause (iv)")));
        let split = sys(2, 3, f, &[(&[&[0]], 0.5), (&[&[1]], 0.5)]);
        assert_eq!(separativity_level(&split), Separativity::None);
        let pair = sys(2, 3, f, &[(&[&[0, 1]], 0.5)]);
        assert_eq!(separativity_level(&pair), Separativity::None);
    }

    #[test]
    fn semi_separative_without_separative() {
        // f1(1) = f2(2); the shared value is never inside a 𝒫-image when
        // 𝒫 = {{3}}.
        let f: &[&[u32]] = &[&[0, 1, 2], &[3, 0, 4]];
        let s = sys(3, 5, f, &[(&[&[0], &[1]], 0.5), (&[&[2]], 0.5)]);
        let r = separativity(&s);
        assert_eq!(r.e_star, vec![vec![0, 1], vec![2]]);
        // f1({1}) = {1} = f2({2}): same class, different subsets.
        assert_eq!(r.level, Separativity::WeaklySeparative);
        let s = sys(3, 5, f, &[(&[&[2]], 0.5)]);
        assert_eq!(separativity_level(&s), Separativity::SemiSeparative);
    }

    #[test]
    fn text_round_trip() {
        let s = sys(2, 5, &[&[0, 1], &[1, 4]], &[(&[&[0, 1]], 0.3), (&[&[0]], 0.25)]);
        let back = System::parse(&s.to_text()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn parse_errors_cite_position() {
        let err = System::parse("m 2\nn 4\nf 1 x\n").unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                line: 3,
                column: 5,
                message: "expected a positive integer, found `x`".into()
            }
        );
        assert!(matches!(System::parse("m 2\nn 4\nf 1 2\nclass 1.5 {1}\n"), Err(Error::InvalidArgument(_))));
        assert!(matches!(System::parse("m 2\nbogus\n"), Err(Error::Parse { line: 2, column: 1, .. })));
    }
}
