#pragma once

// The network (objects, classes, relations, exploiters, modifiers) as an
// immutable value. Every operation returns a new network.

#include <oodn/error.hpp>
#include <oodn/exploiters.hpp>
#include <oodn/model.hpp>
#include <oodn/modifiers.hpp>

#include <algorithm>
#include <charconv>
#include <compare>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace oodn {

enum class NodeKind : std::uint8_t { Object, Class };

inline std::string_view to_string(NodeKind k) { return k == NodeKind::Object ? "object" : "class"; }

struct NodeRef {
    NodeKind kind = NodeKind::Class;
    std::string name;
    unsigned clone_index = 0;  // objects only

    static NodeRef cls(std::string n) { return {NodeKind::Class, std::move(n), 0}; }
    static NodeRef object(std::string id, unsigned clone = 0) { return {NodeKind::Object, std::move(id), clone}; }
    static NodeRef of(const ObjectInstance& o) { return object(o.identifier, o.clone_index); }
    static NodeRef of(const ClassDef& c) { return cls(c.name); }

    /// "A#2" for clone 2 of object A; plain names otherwise.
    std::string label() const {
        return clone_index == 0 ? name : name + "#" + std::to_string(clone_index);
    }

    /// Splits an object label into identifier and clone index.
    static NodeRef parse_object(std::string_view label) {
        auto hash = label.rfind('#');
        if (hash != std::string_view::npos && hash + 1 < label.size()) {
            unsigned idx = 0;
            auto digits = label.substr(hash + 1);
            auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), idx);
            if (ec == std::errc() && p == digits.data() + digits.size() && idx > 0)
                return object(std::string(label.substr(0, hash)), idx);
        }
        return object(std::string(label));
    }

    /// Ordered by name first so query results read alphabetically.
    friend std::strong_ordering operator<=>(const NodeRef& a, const NodeRef& b) {
        if (auto c = a.name <=> b.name; c != 0) return c;
        if (auto c = a.clone_index <=> b.clone_index; c != 0) return c;
        return a.kind <=> b.kind;
    }
    friend bool operator==(const NodeRef&, const NodeRef&) = default;
};

inline std::string to_string(const NodeRef& r) { return std::string(to_string(r.kind)) + " " + r.label(); }

/// Built-in relation kinds plus free-form user labels.
struct RelationKind {
    enum Tag : std::uint8_t { InstanceOf, IsA, AKindOf, ModificationOf, ResultOf, OperandOf, User };
    Tag tag = User;
    std::string label;  // user relations only

    static RelationKind user(std::string l) {
        if (l.empty()) throw NetworkError("user relation label must not be empty");
        return {User, std::move(l)};
    }

    /// is-a and a-kind-of both name subsumption.
    bool matches(const RelationKind& other) const {
        auto sub = [](Tag t) { return t == IsA || t == AKindOf; };
        if (sub(tag) && sub(other.tag)) return true;
        return *this == other;
    }

    friend auto operator<=>(const RelationKind&, const RelationKind&) = default;
    friend bool operator==(const RelationKind&, const RelationKind&) = default;
};

inline std::string to_string(const RelationKind& k) {
    switch (k.tag) {
        case RelationKind::InstanceOf: return "instance-of";
        case RelationKind::IsA: return "is-a";
        case RelationKind::AKindOf: return "a-kind-of";
        case RelationKind::ModificationOf: return "modification-of";
        case RelationKind::ResultOf: return "result-of";
        case RelationKind::OperandOf: return "operand-of";
        case RelationKind::User: return k.label;
    }
    return k.label;
}

/// Built-in names map to their tags; anything else is a user label.
inline RelationKind parse_relation_kind(std::string_view s) {
    for (auto t : {RelationKind::InstanceOf, RelationKind::IsA, RelationKind::AKindOf, RelationKind::ModificationOf,
                   RelationKind::ResultOf, RelationKind::OperandOf}) {
        if (to_string(RelationKind{t, {}}) == s) return {t, {}};
    }
    return RelationKind::user(std::string(s));
}

enum class Provenance : std::uint8_t { Declared, Inferred, Recorded };

inline std::string_view to_string(Provenance p) {
    switch (p) {
        case Provenance::Declared: return "declared";
        case Provenance::Inferred: return "inferred";
        case Provenance::Recorded: return "recorded";
    }
    return "?";
}

inline std::optional<Provenance> parse_provenance(std::string_view s) {
    for (auto p : {Provenance::Declared, Provenance::Inferred, Provenance::Recorded}) {
        if (to_string(p) == s) return p;
    }
    return std::nullopt;
}

struct Relation {
    NodeRef from;
    NodeRef to;
    RelationKind kind;
    Provenance provenance = Provenance::Declared;

    bool same_edge(const Relation& o) const { return from == o.from && to == o.to && kind == o.kind; }

    friend auto operator<=>(const Relation&, const Relation&) = default;
    friend bool operator==(const Relation&, const Relation&) = default;
};

inline std::string to_string(const Relation& r) {
    return r.from.label() + " --" + to_string(r.kind) + "--> " + r.to.label();
}

/// Class-level quantitative values must agree too, so that e.g. a 3-sided
/// variant of a 4-sided class is a different node.
inline bool structurally_identical(const ClassDef& a, const ClassDef& b) {
    if (!members_equivalent(a, b)) return false;
    auto values_agree = [](const Specification& x, const Specification& y) {
        for (const auto& p : x) {
            if (const auto* q = p.quantitative()) {
                if (y.find(p.name())->quantitative()->value != q->value) return false;
            }
        }
        return true;
    };
    if (!values_agree(a.core.specification, b.core.specification)) return false;
    for (std::size_t i = 0; i < a.projections.size(); ++i) {
        if (!values_agree(a.projections[i].specification, b.projections[i].specification)) return false;
    }
    return true;
}

inline bool structurally_identical(const ObjectInstance& a, const ObjectInstance& b) {
    if (!objects_similar(a, b)) return false;
    for (const auto& p : a.specification) {
        if (const auto* q = p.quantitative()) {
            if (b.find_quantitative(p.name())->value != q->value) return false;
        }
    }
    return true;
}

struct ApplyOptions {
    bool dedup = true;
    std::optional<std::string> result_name;
    std::optional<unsigned> clone_index;  // clone only
};

class Network;

struct ModifierApplication;
struct ExploiterApplication;

enum class Direction : std::uint8_t { Out, In, Both };

class Network {
public:
    /// All five exploiters enabled.
    Network() : exploiters_(std::begin(all_exploiters), std::end(all_exploiters)) {}

    const std::vector<ObjectInstance>& objects() const noexcept { return objects_; }
    const std::vector<ClassDef>& classes() const noexcept { return classes_; }
    const std::vector<Relation>& relations() const noexcept { return relations_; }
    const std::set<Exploiter>& exploiters() const noexcept { return exploiters_; }
    const std::vector<Modifier>& modifiers() const noexcept { return modifiers_; }

    const ObjectInstance* find_object(std::string_view id, unsigned clone = 0) const {
        auto it = std::ranges::find_if(objects_, [&](auto& o) { return o.identifier == id && o.clone_index == clone; });
        return it == objects_.end() ? nullptr : &*it;
    }
    const ClassDef* find_class(std::string_view name) const {
        auto it = std::ranges::find_if(classes_, [&](auto& c) { return c.name == name; });
        return it == classes_.end() ? nullptr : &*it;
    }
    const Modifier* find_modifier(std::string_view name) const {
        auto it = std::ranges::find_if(modifiers_, [&](auto& m) { return m.name == name; });
        return it == modifiers_.end() ? nullptr : &*it;
    }
    bool contains(const NodeRef& r) const {
        return r.kind == NodeKind::Object ? find_object(r.name, r.clone_index) != nullptr : find_class(r.name) != nullptr;
    }
    const ObjectInstance& object(const NodeRef& r) const {
        const auto* o = r.kind == NodeKind::Object ? find_object(r.name, r.clone_index) : nullptr;
        if (!o) throw NetworkError("unknown object '" + r.label() + "'");
        return *o;
    }
    const ClassDef& cls(const NodeRef& r) const {
        const auto* c = r.kind == NodeKind::Class ? find_class(r.name) : nullptr;
        if (!c) throw NetworkError("unknown class '" + r.name + "'");
        return *c;
    }
    void require(const NodeRef& r) const {
        if (!contains(r)) throw NetworkError("unknown " + to_string(r));
    }

    /// Every node, sorted.
    std::vector<NodeRef> nodes() const {
        std::vector<NodeRef> out;
        for (const auto& o : objects_) out.push_back(NodeRef::of(o));
        for (const auto& c : classes_) out.push_back(NodeRef::of(c));
        std::ranges::sort(out);
        return out;
    }

    // --- construction ---------------------------------------------------------

    [[nodiscard]] Network add_object(ObjectInstance o) const {
        try {
            o.validate();
        } catch (const ModelError& e) {
            throw NetworkError(std::string("invalid object: ") + e.what());
        }
        if (find_object(o.identifier, o.clone_index)) throw NetworkError("duplicate object '" + o.label() + "'");
        Network n = *this;
        n.objects_.push_back(std::move(o));
        return n;
    }

    [[nodiscard]] Network add_class(ClassDef c) const {
        try {
            c.validate();
            for (const auto& p : c.core.specification) p.validate();
            for (const auto& m : c.core.signature) m.validate();
            for (const auto& pr : c.projections) {
                for (const auto& p : pr.specification) p.validate();
                for (const auto& m : pr.signature) m.validate();
            }
        } catch (const ModelError& e) {
            throw NetworkError(std::string("invalid class: ") + e.what());
        }
        if (find_class(c.name)) throw NetworkError("duplicate class '" + c.name + "'");
        Network n = *this;
        n.classes_.push_back(std::move(c));
        return n;
    }

    [[nodiscard]] Network add_modifier(Modifier m) const {
        m.validate();
        if (find_modifier(m.name)) throw NetworkError("duplicate modifier '" + m.name + "'");
        if (m.target) require(target_ref(m));
        Network n = *this;
        n.modifiers_.push_back(std::move(m));
        return n;
    }

    /// Fails on unknown endpoints or a repeated (from, to, kind) triple.
    [[nodiscard]] Network declare_relation(Relation r) const {
        require(r.from);
        require(r.to);
        if (has_edge(r)) throw NetworkError("duplicate relation " + to_string(r));
        Network n = *this;
        n.relations_.push_back(std::move(r));
        return n;
    }

    [[nodiscard]] Network with_exploiters(std::set<Exploiter> enabled) const {
        Network n = *this;
        n.exploiters_ = std::move(enabled);
        return n;
    }

    bool has_edge(const Relation& r) const {
        return std::ranges::any_of(relations_, [&](auto& x) { return x.same_edge(r); });
    }

    /// The node a modifier is declared on.
    static NodeRef target_ref(const Modifier& m) {
        if (!m.target) throw NetworkError("modifier '" + m.name + "' declares no target");
        return m.target_kind == TargetKind::Object ? NodeRef::parse_object(*m.target) : NodeRef::cls(*m.target);
    }

    /// Re-checks every invariant; used after loading a document.
    void validate() const {
        Network fresh = Network{}.with_exploiters(exploiters_);
        for (const auto& o : objects_) fresh = fresh.add_object(o);
        for (const auto& c : classes_) fresh = fresh.add_class(c);
        for (const auto& m : modifiers_) fresh = fresh.add_modifier(m);
        for (const auto& r : relations_) fresh = fresh.declare_relation(r);
    }

    // --- inference --------------------------------------------------------------

    /// Subsumption edges between every pair of homogeneous classes, and
    /// instance-of edges from each object to its most specific satisfied
    /// classes. Sorted, deterministic.
    std::vector<Relation> infer_relations(double threshold = 1.0) const {
        if (!(threshold > 0.0 && threshold <= 1.0)) throw NetworkError("threshold must lie in (0,1]");
        std::vector<const ClassDef*> homo;
        for (const auto& c : classes_) {
            if (c.is_homogeneous()) homo.push_back(&c);
        }
        std::set<Relation> out;
        for (const auto* x : homo) {
            for (const auto* y : homo) {
                if (x != y && subsumes(*x, *y))
                    out.insert({NodeRef::of(*y), NodeRef::of(*x), {RelationKind::AKindOf, {}}, Provenance::Inferred});
            }
        }
        for (const auto& o : objects_) {
            std::vector<const ClassDef*> sat;
            for (const auto* t : homo) {
                double d = 0.0;
                try {
                    d = satisfies(o, *t, threshold);
                } catch (const EvalError&) {
                    d = 0.0;  // an expression that cannot be evaluated on o fails
                }
                if (d >= threshold) sat.push_back(t);
            }
            for (const auto* t : sat) {
                bool most_specific = std::ranges::none_of(sat, [&](auto* u) { return u != t && subsumes(*t, *u); });
                if (most_specific)
                    out.insert({NodeRef::of(o), NodeRef::of(*t), {RelationKind::InstanceOf, {}}, Provenance::Inferred});
            }
        }
        return {out.begin(), out.end()};
    }

    /// This network plus inferred edges not already present.
    [[nodiscard]] Network with_inferred(double threshold = 1.0) const {
        Network n = *this;
        for (auto& r : infer_relations(threshold)) {
            if (!n.has_edge(r)) n.relations_.push_back(std::move(r));
        }
        return n;
    }

    // --- growth -------------------------------------------------------------------

    ModifierApplication apply_modifier(std::string_view modifier, const NodeRef& target,
                                       const ApplyOptions& opts = {}) const;

    ExploiterApplication apply_exploiter(Exploiter op, const std::vector<NodeRef>& operands,
                                         const ApplyOptions& opts = {}) const;

    // --- queries --------------------------------------------------------------------

    /// Edges touching `ref` in the given direction, optionally of one kind.
    std::vector<Relation> edges(const NodeRef& ref, std::optional<RelationKind> kind = std::nullopt,
                                Direction dir = Direction::Both) const {
        require(ref);
        std::vector<Relation> out;
        for (const auto& r : relations_) {
            if (kind && !r.kind.matches(*kind)) continue;
            bool out_edge = r.from == ref, in_edge = r.to == ref;
            if ((dir != Direction::In && out_edge) || (dir != Direction::Out && in_edge)) out.push_back(r);
        }
        std::ranges::sort(out);
        return out;
    }

    std::vector<NodeRef> neighbors(const NodeRef& ref, std::optional<RelationKind> kind = std::nullopt,
                                   Direction dir = Direction::Both) const {
        std::set<NodeRef> out;
        for (const auto& r : edges(ref, kind, dir)) out.insert(r.from == ref ? r.to : r.from);
        return {out.begin(), out.end()};
    }

    /// Transitive closure along outgoing edges of `kind`, start excluded.
    std::vector<NodeRef> reachable(const NodeRef& ref, const RelationKind& kind) const {
        require(ref);
        std::set<NodeRef> seen;
        std::queue<NodeRef> todo;
        todo.push(ref);
        while (!todo.empty()) {
            NodeRef cur = todo.front();
            todo.pop();
            for (const auto& r : relations_) {
                if (r.from == cur && r.kind.matches(kind) && r.to != ref && seen.insert(r.to).second) todo.push(r.to);
            }
        }
        return {seen.begin(), seen.end()};
    }

    std::vector<NodeRef> instances_of(const NodeRef& cls) const {
        if (cls.kind != NodeKind::Class) throw NetworkError(to_string(cls) + " is not a class");
        return neighbors(cls, RelationKind{RelationKind::InstanceOf, {}}, Direction::In);
    }

    /// Direct and transitive subclasses as recorded by subsumption edges.
    std::vector<NodeRef> subclasses_of(const NodeRef& cls) const {
        if (cls.kind != NodeKind::Class) throw NetworkError(to_string(cls) + " is not a class");
        require(cls);
        std::set<NodeRef> seen;
        std::queue<NodeRef> todo;
        todo.push(cls);
        RelationKind sub{RelationKind::AKindOf, {}};
        while (!todo.empty()) {
            NodeRef cur = todo.front();
            todo.pop();
            for (const auto& r : relations_) {
                if (r.to == cur && r.kind.matches(sub) && r.from != cls && seen.insert(r.from).second) todo.push(r.from);
            }
        }
        return {seen.begin(), seen.end()};
    }

    friend bool operator==(const Network&, const Network&) = default;

private:
    std::vector<ObjectInstance> objects_;
    std::vector<ClassDef> classes_;
    std::vector<Relation> relations_;
    std::set<Exploiter> exploiters_;
    std::vector<Modifier> modifiers_;

    /// `base`, or `base` with the smallest free numeric suffix.
    template <class Taken>
    static std::string fresh_name(const std::string& base, Taken taken) {
        if (!taken(base)) return base;
        for (unsigned i = 2;; ++i) {
            std::string n = base + "_" + std::to_string(i);
            if (!taken(n)) return n;
        }
    }

    void record(const Relation& r) {
        if (!has_edge(r)) relations_.push_back(r);
    }

    /// Adds `c` (or finds an identical class) and returns its node.
    NodeRef place_class(ClassDef c, const ApplyOptions& opts, bool& created) {
        if (opts.dedup) {
            for (const auto& existing : classes_) {
                if (structurally_identical(existing, c)) {
                    created = false;
                    return NodeRef::of(existing);
                }
            }
        }
        if (opts.result_name) {
            if (find_class(*opts.result_name)) throw NetworkError("class '" + *opts.result_name + "' already exists");
            c.name = *opts.result_name;
        } else {
            c.name = fresh_name(c.name, [&](const std::string& n) { return find_class(n) != nullptr; });
        }
        created = true;
        *this = add_class(std::move(c));
        return NodeRef::cls(classes_.back().name);
    }
};

struct ModifierApplication {
    Network network;
    NodeRef result;
    bool created = false;
};

struct ExploiterApplication {
    Network network;
    std::optional<NodeRef> result;
    std::vector<NodeRef> objects;  // object set typed by the result (object union)
    std::string reason;            // why the result does not exist
    bool created = false;
};

inline ModifierApplication Network::apply_modifier(std::string_view name, const NodeRef& target,
                                                   const ApplyOptions& opts) const {
    const Modifier* m = find_modifier(name);
    if (!m) throw NetworkError("unknown modifier '" + std::string(name) + "'");
    require(target);
    if ((m->target_kind == TargetKind::Object) != (target.kind == NodeKind::Object))
        throw NetworkError("modifier '" + m->name + "' applies to " + std::string(to_string(m->target_kind))
                           + "s, not to " + to_string(target));

    ModifierApplication app{*this, {}, false};
    Network& n = app.network;
    std::string derived = m->name + "(" + target.label() + ")";
    if (target.kind == NodeKind::Class) {
        ClassDef out = apply_to_class(*m, cls(target));
        out.name = derived;
        app.result = n.place_class(std::move(out), opts, app.created);
    } else {
        ObjectInstance out = apply_to_object(*m, object(target));
        std::optional<NodeRef> found;
        if (opts.dedup) {
            for (const auto& o : objects_) {
                if (structurally_identical(o, out)) found = NodeRef::of(o);
            }
        }
        if (found) {
            app.result = *found;
        } else {
            if (opts.result_name) {
                if (find_object(*opts.result_name)) throw NetworkError("object '" + *opts.result_name + "' already exists");
                out.identifier = *opts.result_name;
            } else {
                out.identifier = fresh_name(derived, [&](const std::string& id) { return find_object(id) != nullptr; });
            }
            out.clone_index = 0;
            n = n.add_object(out);
            app.result = NodeRef::of(out);
            app.created = true;
        }
    }
    n.record({target, app.result, {RelationKind::ModificationOf, {}}, Provenance::Recorded});
    return app;
}

inline ExploiterApplication Network::apply_exploiter(Exploiter op, const std::vector<NodeRef>& operands,
                                                     const ApplyOptions& opts) const {
    if (!exploiters_.contains(op)) throw NetworkError("exploiter '" + std::string(to_string(op)) + "' is not enabled");
    for (const auto& r : operands) require(r);

    ExploiterApplication app{*this, std::nullopt, {}, {}, false};
    Network& n = app.network;
    auto link = [&](const NodeRef& result) {
        for (const auto& r : operands) {
            n.record({r, result, {RelationKind::OperandOf, {}}, Provenance::Recorded});
            n.record({result, r, {RelationKind::ResultOf, {}}, Provenance::Recorded});
        }
    };

    if (op == Exploiter::Clone) {
        if (operands.size() != 1 || operands[0].kind != NodeKind::Object)
            throw NetworkError("clone takes exactly one object operand");
        const ObjectInstance& o = object(operands[0]);
        unsigned index = opts.clone_index.value_or(0);
        if (index == 0) {
            for (const auto& x : objects_) {
                if (x.identifier == o.identifier) index = std::max(index, x.clone_index);
            }
            ++index;
        }
        ObjectInstance c = clone_object(o, index, objects_);
        n = n.add_object(c);
        app.result = NodeRef::of(c);
        app.created = true;
        link(*app.result);
        return app;
    }

    std::size_t want = op == Exploiter::Union ? 0 : 2;
    if (want && operands.size() != want)
        throw NetworkError(std::string(to_string(op)) + " takes exactly two operands");
    if (!want && operands.size() < 2) throw NetworkError("union takes at least two operands");

    bool all_objects = std::ranges::all_of(operands, [](auto& r) { return r.kind == NodeKind::Object; });
    OperationResult res;
    if (op == Exploiter::Union && all_objects) {
        std::vector<ObjectInstance> objs;
        for (const auto& r : operands) objs.push_back(object(r));
        // Indices already taken in the network count as used.
        res = object_union(objs);
        for (auto& o : res.objects) {
            if (o.clone_index != 0 && n.find_object(o.identifier, o.clone_index)) {
                bool same_as_operand = std::ranges::any_of(operands, [&](auto& r) { return r == NodeRef::of(o); });
                if (!same_as_operand) {
                    unsigned idx = 0;
                    for (const auto& x : n.objects_) {
                        if (x.identifier == o.identifier) idx = std::max(idx, x.clone_index);
                    }
                    o.clone_index = idx + 1;
                }
            }
            if (!n.find_object(o.identifier, o.clone_index)) n = n.add_object(o);
            app.objects.push_back(NodeRef::of(o));
        }
    } else {
        std::vector<ClassDef> cs;
        for (const auto& r : operands) {
            if (r.kind == NodeKind::Class) cs.push_back(cls(r));
            else {
                ClassDef c = induced_class(object(r));
                c.name = "T(" + r.label() + ")";
                cs.push_back(std::move(c));
            }
        }
        switch (op) {
            case Exploiter::Union: res = class_union(cs); break;
            case Exploiter::Intersection: res = class_intersection(cs[0], cs[1]); break;
            case Exploiter::Difference: res = class_difference(cs[0], cs[1]); break;
            case Exploiter::SymmetricDifference: res = class_symmetric_difference(cs[0], cs[1]); break;
            case Exploiter::Clone: break;
        }
    }

    if (!res.present()) {
        app.network = *this;
        app.objects.clear();
        app.reason = res.reason;
        return app;
    }
    app.result = n.place_class(std::move(*res.cls), opts, app.created);
    link(*app.result);
    for (const auto& o : app.objects) n.record({o, *app.result, {RelationKind::InstanceOf, {}}, Provenance::Recorded});
    return app;
}

} // namespace oodn
