mod common;

use std::collections::BTreeSet;

use common::load;
use oa_core::frontend::parse_str;
use oa_core::pointsto::{analyze_program, pa_entry_points, AllocSites, Pts};

const CHAIN: &str = "class B {\n}
class A {
  field f: B;
  static method main() {
    x = new A();
    y = new B();
    x.f = y;
    z = x.f;
    w = x;
    h = mkref A;
  }
}
";

#[test]
fn alloc_copy_store_load() {
    let p = parse_str("c.mir", CHAIN).unwrap();
    let r = analyze_program(&p).unwrap();
    let main = p.find_method("A.main").unwrap();
    let sites = AllocSites::number(&p);
    assert_eq!(sites.len(), 2);
    let (a, b) = (
        sites.at(&oa_core::mir::Position::new("c.mir", 6)).unwrap(),
        sites.at(&oa_core::mir::Position::new("c.mir", 7)).unwrap(),
    );
    assert_eq!((a, b), (0, 1));
    assert_eq!(r.local(main, "x"), Pts::Sites(BTreeSet::from([a])));
    assert_eq!(r.local(main, "w"), Pts::Sites(BTreeSet::from([a])));
    assert_eq!(r.local(main, "z"), Pts::Sites(BTreeSet::from([b])));
    assert!(r.local(main, "h").is_miss());
    assert!(r.is_fixpoint(&p));
}

#[test]
fn entry_point_rules() {
    let (p, _) = load("fig1_simple");
    let names: Vec<String> = pa_entry_points(&p)
        .unwrap()
        .into_iter()
        .map(|m| p.method_name(m))
        .collect();
    assert_eq!(names, ["Main.main"]);

    let lib = parse_str(
        "l.mir",
        "class L {\n method a() {\n }\n method b() {\n }\n private method c() {\n }\n method d() {\n }\n private method e() {\n }\n}\n",
    )
    .unwrap();
    let names: BTreeSet<String> = pa_entry_points(&lib)
        .unwrap()
        .into_iter()
        .map(|m| lib.method_name(m))
        .collect();
    assert_eq!(
        names,
        BTreeSet::from(["L.a".into(), "L.b".into(), "L.d".into()])
    );

    let two = parse_str(
        "m.mir",
        "class A {\n static method main() {\n }\n}\nclass B {\n static method main() {\n }\n}\n",
    )
    .unwrap();
    assert_eq!(pa_entry_points(&two).unwrap().len(), 2);
}

#[test]
fn report_simple_wiring_excludes_report_advanced() {
    let (p, _) = load("fig1_advanced");
    let r = analyze_program(&p).unwrap();
    let gen = p.find_method("Text.generateReport").unwrap();
    let rep = r.local(gen, "rep");
    let Pts::Sites(s) = &rep else {
        panic!("rep is a miss")
    };
    assert_eq!(s.len(), 1);
    assert_eq!(
        r.sites.get(*s.iter().next().unwrap()).class,
        "ReportAdvanced"
    );
    let nodes: BTreeSet<String> = r
        .callgraph
        .nodes
        .iter()
        .map(|m| p.method_name(*m))
        .collect();
    assert!(nodes.contains("ReportAdvanced.countDupWords"));
    assert!(!nodes.contains("ReportSimple.countDupWords"));

    let (p, _) = load("fig1_simple");
    let r = analyze_program(&p).unwrap();
    let nodes: BTreeSet<String> = r
        .callgraph
        .nodes
        .iter()
        .map(|m| p.method_name(*m))
        .collect();
    assert!(
        nodes.contains("ReportSimple.countDupWords")
            && nodes.contains("ReportSimple.countDupWhiteSpace")
    );
}

#[test]
fn mkref_receiver_leaves_sites_unresolved() {
    let p = parse_str(
        "r.mir",
        "class A {\n method m() {\n }\n static method main() {\n h = mkref A;\n call h.m();\n }\n}\n",
    )
    .unwrap();
    let r = analyze_program(&p).unwrap();
    let virtual_edges = r
        .callgraph
        .edges
        .iter()
        .filter(|e| e.site.line == 6)
        .count();
    assert_eq!(virtual_edges, 0);
    assert_eq!(r.callgraph.unresolved.len(), 1);
    assert!(r.dump(&p).contains("#MISS"));
}

#[test]
fn static_call_edge_regardless_of_pts() {
    let p = parse_str(
        "s.mir",
        "class A {\n static method f() {\n }\n static method main() {\n call A::f();\n }\n}\n",
    )
    .unwrap();
    let r = analyze_program(&p).unwrap();
    assert_eq!(r.callgraph.edges.len(), 1);
    assert!(r.callgraph.unresolved.is_empty());
}

#[test]
fn deep_chain_resolves_to_one_target_per_hop() {
    let (p, _) = load("deep-hierarchy");
    let r = analyze_program(&p).unwrap();
    let handle_edges: Vec<_> = r
        .callgraph
        .edges
        .iter()
        .filter(|e| p.method(e.target).name == "handle")
        .collect();
    let reached: BTreeSet<String> = handle_edges
        .iter()
        .map(|e| p.method(e.target).declaring_class.clone())
        .collect();
    assert_eq!(reached.len(), 5, "{reached:?}");
}
