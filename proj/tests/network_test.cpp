#include <oodn/network.hpp>

#include "support/polygons.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace oodn;
using namespace oodn::testing;

namespace {

const RelationKind instance_of{RelationKind::InstanceOf, {}};
const RelationKind a_kind_of{RelationKind::AKindOf, {}};
const RelationKind is_a{RelationKind::IsA, {}};
const RelationKind modification_of{RelationKind::ModificationOf, {}};
const RelationKind operand_of{RelationKind::OperandOf, {}};
const RelationKind result_of{RelationKind::ResultOf, {}};

NodeRef C(const char* n) { return NodeRef::cls(n); }
NodeRef O(const char* n, unsigned i = 0) { return NodeRef::object(n, i); }

std::set<std::tuple<std::string, std::string, std::string>> triples(const std::vector<Relation>& rs) {
    std::set<std::tuple<std::string, std::string, std::string>> out;
    for (const auto& r : rs) out.insert({r.from.label(), to_string(r.kind), r.to.label()});
    return out;
}

// Members drawn from a pool of six, selected by bit mask.
constexpr int pool_size = 6;

ClassDef mask_class(const std::string& name, unsigned mask) {
    Specification spec;
    Signature sig;
    for (int i = 0; i < 3; ++i) {
        if (mask & (1u << i)) spec.add(Property::quantitative("q" + std::to_string(i), std::nullopt, "cm"));
    }
    if (mask & 8u) spec.add(Property::qualitative("l0", std::nullopt, 1.0));
    if (mask & 16u) sig.add(Method{"f0", {"x"}, std::nullopt});
    if (mask & 32u) sig.add(Method{"f1", {"x"}, std::nullopt});
    return ClassDef::homogeneous(name, std::move(spec), std::move(sig));
}

ObjectInstance mask_object(const std::string& id, unsigned mask) {
    ObjectInstance o{id, 0, {}, {}};
    for (int i = 0; i < 3; ++i) {
        if (mask & (1u << i)) o.specification.add(Property::quantitative("q" + std::to_string(i), Magnitude(1.0 * i), "cm"));
    }
    if (mask & 8u) o.specification.add(Property::qualitative("l0", std::nullopt, 1.0));
    if (mask & 16u) o.signature.add(Method{"f0", {"x"}, parse("x")});
    if (mask & 32u) o.signature.add(Method{"f1", {"x"}, parse("x * 2")});
    return o;
}

bool proper_subset(unsigned a, unsigned b) { return (a & b) == a && a != b; }

} // namespace

// --- construction -----------------------------------------------------------------

TEST(Network, PolygonFixture) {
    auto n = polygons_network();
    EXPECT_EQ(n.classes().size(), 3u);
    EXPECT_EQ(n.objects().size(), 2u);
    EXPECT_EQ(n.modifiers().size(), 5u);
    EXPECT_EQ(n.exploiters().size(), 5u);
    EXPECT_NO_THROW(n.validate());
}

TEST(Network, ConstructionErrors) {
    auto n = polygons_network();
    EXPECT_THROW((void)n.add_class(rhombus_class()), NetworkError);
    EXPECT_THROW((void)n.add_object(rhombus_r1()), NetworkError);
    EXPECT_THROW((void)n.add_modifier(m1_square()), NetworkError);
    EXPECT_THROW((void)n.declare_relation({O("R_1"), C("T(Q)"), instance_of}), NetworkError);
    Modifier dangling{"M9", TargetKind::Class, {edit::RemoveMethod{"area"}}, "T(Q)"};
    EXPECT_THROW((void)n.add_modifier(dangling), NetworkError);
    auto with = n.declare_relation({O("R_1"), C("T(P)"), RelationKind::user("drawn-by")});
    EXPECT_THROW((void)with.declare_relation({O("R_1"), C("T(P)"), RelationKind::user("drawn-by")}), NetworkError);
    EXPECT_THROW(RelationKind::user(""), NetworkError);
    ObjectInstance abstract{"X", 0, {count_of("sides_count", "sides")}, {}};
    EXPECT_THROW((void)n.add_object(abstract), NetworkError);
}

TEST(Network, PersistentValues) {
    const auto n = polygons_network();
    const auto snapshot = n;
    auto grown = n.add_class(polyline_l1_class());
    auto applied = n.apply_modifier("M1(T(R))", C("T(R)"));
    auto inferred = n.with_inferred();
    EXPECT_EQ(n, snapshot);
    EXPECT_EQ(grown.classes().size(), 4u);
    EXPECT_EQ(n.classes().size(), 3u);
    EXPECT_TRUE(n.relations().empty());
}

TEST(NodeRef, Labels) {
    EXPECT_EQ(NodeRef::parse_object("A#2"), O("A", 2));
    EXPECT_EQ(NodeRef::parse_object("A"), O("A"));
    EXPECT_EQ(NodeRef::parse_object("A#x"), O("A#x"));
    EXPECT_EQ(NodeRef::parse_object("A#0"), O("A#0"));
    EXPECT_EQ(O("A", 3).label(), "A#3");
    for (auto s : {"instance-of", "is-a", "a-kind-of", "modification-of", "result-of", "operand-of", "likes"})
        EXPECT_EQ(to_string(parse_relation_kind(s)), s);
    EXPECT_TRUE(is_a.matches(a_kind_of));
    EXPECT_FALSE(is_a.matches(instance_of));
}

// --- inference --------------------------------------------------------------------

TEST(Infer, PolygonRelations) {
    auto rs = polygons_network().infer_relations(1.0);
    EXPECT_EQ(triples(rs), (std::set<std::tuple<std::string, std::string, std::string>>{
                               {"R_1", "instance-of", "T(R)"},
                               {"S_1", "instance-of", "T(S)"},
                               {"T(R)", "a-kind-of", "T(P)"},
                               {"T(S)", "a-kind-of", "T(P)"},
                               {"T(S)", "a-kind-of", "T(R)"},
                           }));
    for (const auto& r : rs) EXPECT_EQ(r.provenance, Provenance::Inferred);
}

TEST(Infer, BaseCase) {
    auto n = Network{}.add_class(rhombus_class()).add_object(rhombus_r1());
    EXPECT_EQ(triples(n.infer_relations()),
              (std::set<std::tuple<std::string, std::string, std::string>>{{"R_1", "instance-of", "T(R)"}}));
    EXPECT_THROW((void)n.infer_relations(0.0), NetworkError);
    EXPECT_THROW((void)n.infer_relations(1.5), NetworkError);
}

TEST(Infer, DeterministicAndIdempotent) {
    auto n = polygons_network();
    EXPECT_EQ(n.infer_relations(), n.infer_relations());
    auto once = n.with_inferred();
    EXPECT_EQ(once.with_inferred(), once);
    EXPECT_EQ(once.infer_relations(), n.infer_relations());
}

TEST(Infer, UnevaluableExpressionIsNotSatisfied) {
    auto needs = ClassDef::homogeneous("T(W)", {Property::qualitative("wide", parse("self.width.value > 2"))}, {});
    auto n = Network{}.add_class(needs).add_object(rhombus_r1());
    EXPECT_TRUE(n.infer_relations().empty());
}

TEST(Infer, RandomLatticesMatchPairwiseOracle) {
    std::mt19937 rng(42);
    std::uniform_int_distribution<unsigned> mask(1, (1u << pool_size) - 1);
    for (int round = 0; round < 60; ++round) {
        std::vector<unsigned> cm, om;
        Network n;
        for (int i = 0; i < 6; ++i) {
            cm.push_back(mask(rng));
            n = n.add_class(mask_class("T" + std::to_string(i), cm.back()));
        }
        for (int i = 0; i < 3; ++i) {
            om.push_back(mask(rng));
            n = n.add_object(mask_object("o" + std::to_string(i), om.back()));
        }
        std::set<std::tuple<std::string, std::string, std::string>> want;
        for (int x = 0; x < 6; ++x) {
            for (int y = 0; y < 6; ++y) {
                if (proper_subset(cm[x], cm[y]))
                    want.insert({"T" + std::to_string(y), "a-kind-of", "T" + std::to_string(x)});
            }
        }
        for (int o = 0; o < 3; ++o) {
            for (int t = 0; t < 6; ++t) {
                bool sat = (cm[t] & om[o]) == cm[t];
                bool dominated = false;
                for (int u = 0; u < 6; ++u) {
                    if ((cm[u] & om[o]) == cm[u] && proper_subset(cm[t], cm[u])) dominated = true;
                }
                if (sat && !dominated) want.insert({"o" + std::to_string(o), "instance-of", "T" + std::to_string(t)});
            }
        }
        auto got = n.infer_relations();
        EXPECT_EQ(triples(got), want) << round;
        // Soundness against the library's own judgments.
        for (const auto& r : got) {
            if (r.kind == instance_of) EXPECT_GE(satisfies(n.object(r.from), n.cls(r.to)), 1.0);
            else EXPECT_TRUE(subsumes(n.cls(r.to), n.cls(r.from)));
        }
    }
}

// --- modifiers in the network ---------------------------------------------------------

TEST(ApplyModifier, DedupOntoExistingClass) {
    auto n = polygons_network();
    auto app = n.apply_modifier("M1(T(S))", C("T(S)"));
    EXPECT_FALSE(app.created);
    EXPECT_EQ(app.result, C("T(R)"));
    EXPECT_EQ(app.network.classes().size(), 3u);
    EXPECT_EQ(triples(app.network.relations()),
              (std::set<std::tuple<std::string, std::string, std::string>>{{"T(S)", "modification-of", "T(R)"}}));
    EXPECT_EQ(app.network.relations()[0].provenance, Provenance::Recorded);
    // Dedup soundness.
    EXPECT_TRUE(members_equivalent(app.network.cls(app.result), apply_to_class(m1_square(), square_class())));
}

TEST(ApplyModifier, NewNodeForPolyline) {
    auto n = polygons_network();
    auto app = n.apply_modifier("M1(T(R))", C("T(R)"), {.result_name = "T(L_1)"});
    EXPECT_TRUE(app.created);
    EXPECT_EQ(app.result, C("T(L_1)"));
    EXPECT_EQ(app.network.cls(app.result).core.specification, polyline_l1_class().core.specification);
    EXPECT_TRUE(app.network.has_edge({C("T(R)"), C("T(L_1)"), modification_of}));

    auto derived = n.apply_modifier("M1(T(R))", C("T(R)"));
    EXPECT_EQ(derived.result.name, "M1(T(R))(T(R))");

    // Applying again adds neither node nor edge.
    auto again = app.network.apply_modifier("M1(T(R))", C("T(R)"));
    EXPECT_FALSE(again.created);
    EXPECT_EQ(again.result, C("T(L_1)"));
    EXPECT_EQ(again.network, app.network);

    // Without dedup the second application gets a suffixed name.
    auto twice = derived.network.apply_modifier("M1(T(R))", C("T(R)"), {.dedup = false});
    EXPECT_EQ(twice.result.name, "M1(T(R))(T(R))_2");
    EXPECT_THROW((void)app.network.apply_modifier("M1(T(R))", C("T(R)"), {.dedup = false, .result_name = "T(L_1)"}),
                 NetworkError);
}

TEST(ApplyModifier, ReachableTrail) {
    auto n = polygons_network();
    n = n.apply_modifier("M1(T(S))", C("T(S)")).network;
    n = n.apply_modifier("M1(T(R))", C("T(R)"), {.result_name = "T(L_1)"}).network;
    EXPECT_EQ(n.reachable(C("T(S)"), modification_of), (std::vector{C("T(L_1)"), C("T(R)")}));
    EXPECT_TRUE(n.reachable(C("T(L_1)"), modification_of).empty());
}

TEST(ApplyModifier, ObjectTarget) {
    auto n = polygons_network();
    auto app = n.apply_modifier("M1(R_1)", O("R_1"), {.result_name = "L_1"});
    EXPECT_TRUE(app.created);
    EXPECT_EQ(app.result, O("L_1"));
    EXPECT_EQ(std::get<double>(*app.network.object(app.result).find_quantitative("sides_count")->value), 3.0);
    EXPECT_TRUE(app.network.has_edge({O("R_1"), O("L_1"), modification_of}));
    EXPECT_EQ(app.network.apply_modifier("M1(R_1)", O("R_1")).result, O("L_1"));
}

TEST(ApplyModifier, Errors) {
    auto n = polygons_network();
    EXPECT_THROW((void)n.apply_modifier("M7", C("T(S)")), NetworkError);
    EXPECT_THROW((void)n.apply_modifier("M1(T(S))", C("T(Q)")), NetworkError);
    EXPECT_THROW((void)n.apply_modifier("M1(T(S))", O("R_1")), NetworkError);
    EXPECT_THROW((void)n.apply_modifier("M1(T(S))", C("T(P)")), ModifierError);
}

// --- exploiters in the network ---------------------------------------------------------

TEST(ApplyExploiter, UnionOfFigures) {
    auto n = figures_network();
    auto app = n.apply_exploiter(Exploiter::Union, {C("T(A)"), C("T(B)"), C("T(C)")}, {.result_name = "T(S)"});
    ASSERT_TRUE(app.result);
    EXPECT_EQ(*app.result, C("T(S)"));
    EXPECT_EQ(app.network.classes().size(), 4u);
    EXPECT_EQ(app.network.edges(*app.result, operand_of, Direction::In).size(), 3u);
    EXPECT_EQ(app.network.edges(*app.result, result_of, Direction::Out).size(), 3u);
    EXPECT_EQ(app.network.cls(*app.result).projections.size(), 3u);
}

TEST(ApplyExploiter, UnionOfObjects) {
    auto n = figures_network();
    auto app = n.apply_exploiter(Exploiter::Union, {O("A"), O("B"), O("C")});
    ASSERT_TRUE(app.result);
    EXPECT_EQ(app.objects, (std::vector{O("A"), O("B"), O("C")}));
    EXPECT_EQ(app.network.instances_of(*app.result), (std::vector{O("A"), O("B"), O("C")}));

    auto twice = n.apply_exploiter(Exploiter::Union, {O("A"), O("A")});
    ASSERT_TRUE(twice.result);
    EXPECT_EQ(twice.objects, (std::vector{O("A"), O("A", 1)}));
    EXPECT_TRUE(twice.network.find_object("A", 1));
    EXPECT_EQ(twice.network.objects().size(), 4u);
    // T(A) pins sides_count = 3, the induced class does not: no dedup.
    EXPECT_TRUE(twice.created);
    EXPECT_TRUE(members_equivalent(twice.network.cls(*twice.result), figure_triangle()));
}

TEST(ApplyExploiter, AbsentResultLeavesNetworkUnchanged) {
    auto n = figures_network().add_class(
        ClassDef::homogeneous("T(X)", {Property::qualitative("shiny", std::nullopt, 1.0)}, {}));
    auto app = n.apply_exploiter(Exploiter::Intersection, {C("T(A)"), C("T(X)")});
    EXPECT_FALSE(app.result);
    EXPECT_NE(app.reason.find("does not exist"), std::string::npos);
    EXPECT_EQ(app.network, n);
    EXPECT_FALSE(n.apply_exploiter(Exploiter::Difference, {C("T(A)"), C("T(A)")}).result);
}

TEST(ApplyExploiter, Clone) {
    auto n = polygons_network();
    auto app = n.apply_exploiter(Exploiter::Clone, {O("R_1")});
    ASSERT_TRUE(app.result);
    EXPECT_EQ(*app.result, O("R_1", 1));
    EXPECT_TRUE(app.network.has_edge({O("R_1"), O("R_1", 1), operand_of}));
    EXPECT_TRUE(objects_similar(app.network.object(O("R_1")), app.network.object(O("R_1", 1))));
    auto next = app.network.apply_exploiter(Exploiter::Clone, {O("R_1")});
    EXPECT_EQ(*next.result, O("R_1", 2));
    EXPECT_THROW((void)app.network.apply_exploiter(Exploiter::Clone, {O("R_1")}, {.clone_index = 1}), ModelError);
    EXPECT_THROW((void)n.apply_exploiter(Exploiter::Clone, {C("T(R)")}), NetworkError);
}

TEST(ApplyExploiter, Errors) {
    auto n = figures_network();
    EXPECT_THROW((void)n.with_exploiters({Exploiter::Union}).apply_exploiter(Exploiter::Difference, {C("T(A)"), C("T(B)")}),
                 NetworkError);
    EXPECT_THROW((void)n.apply_exploiter(Exploiter::Union, {C("T(A)"), C("T(Q)")}), NetworkError);
    EXPECT_THROW((void)n.apply_exploiter(Exploiter::Intersection, {C("T(A)")}), NetworkError);
    EXPECT_THROW((void)n.apply_exploiter(Exploiter::Union, {C("T(A)")}), NetworkError);
}

TEST(ApplyExploiter, MixedObjectAndClassOperands) {
    auto n = figures_network();
    auto app = n.apply_exploiter(Exploiter::Intersection, {O("A"), C("T(B)")});
    ASSERT_TRUE(app.result);
    EXPECT_EQ(app.network.cls(*app.result).core.specification.size(), 4u);
}

// --- queries ------------------------------------------------------------------------------

TEST(Query, Patterns) {
    auto n = polygons_network().with_inferred();
    EXPECT_EQ(n.subclasses_of(C("T(P)")), (std::vector{C("T(R)"), C("T(S)")}));
    EXPECT_EQ(n.subclasses_of(C("T(S)")), std::vector<NodeRef>{});
    EXPECT_EQ(n.instances_of(C("T(R)")), std::vector{O("R_1")});
    EXPECT_EQ(n.neighbors(C("T(R)"), is_a, Direction::Out), std::vector{C("T(P)")});
    EXPECT_EQ(n.neighbors(C("T(R)")), (std::vector{O("R_1"), C("T(P)"), C("T(S)")}));
    EXPECT_EQ(n.reachable(C("T(S)"), is_a), (std::vector{C("T(P)"), C("T(R)")}));
    EXPECT_THROW((void)n.neighbors(C("T(Q)")), NetworkError);
    EXPECT_THROW((void)n.instances_of(O("R_1")), NetworkError);

    auto isolated = polygons_network().add_class(polyline_l1_class());
    EXPECT_TRUE(isolated.neighbors(C("T(L_1)")).empty());
}

TEST(Network, EndpointIntegrityAfterGrowth) {
    auto n = figures_network();
    n = n.apply_exploiter(Exploiter::Union, {O("A"), O("A"), O("B")}).network;
    n = n.apply_exploiter(Exploiter::SymmetricDifference, {C("T(A)"), C("T(C)")}).network;
    n = n.apply_exploiter(Exploiter::Clone, {O("C")}).network;
    n = n.with_inferred();
    for (const auto& r : n.relations()) {
        EXPECT_TRUE(n.contains(r.from)) << to_string(r);
        EXPECT_TRUE(n.contains(r.to)) << to_string(r);
    }
    EXPECT_NO_THROW(n.validate());
}
