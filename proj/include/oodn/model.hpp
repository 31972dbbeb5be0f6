#pragma once

// Objects, classes and the judgments between them: property and method
// equivalence, object similarity, class satisfaction and subsumption.

#include <oodn/error.hpp>
#include <oodn/expr.hpp>
#include <oodn/quantity.hpp>

#include <algorithm>
#include <compare>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace oodn {

/// A named verification function into [0,1]. Instances may carry the
/// evaluated degree; an opaque property has a degree and no expression.
struct QualitativeProperty {
    std::string name;
    std::optional<Expr> verification;
    std::optional<double> degree;

    friend bool operator==(const QualitativeProperty&, const QualitativeProperty&) = default;
};

/// Exactly one of a quantitative or qualitative property.
class Property {
public:
    Property(QuantitativeProperty q) : data_(std::move(q)) {}
    Property(QualitativeProperty q) : data_(std::move(q)) {}

    static Property quantitative(std::string name, std::optional<Magnitude> value, std::string units) {
        Property p(QuantitativeProperty{std::move(name), std::move(value), std::move(units)});
        p.validate();
        return p;
    }
    static Property qualitative(std::string name, std::optional<Expr> verification,
                                std::optional<double> degree = std::nullopt) {
        Property p(QualitativeProperty{std::move(name), std::move(verification), degree});
        p.validate();
        return p;
    }

    const std::string& name() const {
        return std::visit([](const auto& p) -> const std::string& { return p.name; }, data_);
    }
    std::string& name() {
        return std::visit([](auto& p) -> std::string& { return p.name; }, data_);
    }

    bool is_quantitative() const noexcept { return std::holds_alternative<QuantitativeProperty>(data_); }
    const QuantitativeProperty* quantitative() const noexcept { return std::get_if<QuantitativeProperty>(&data_); }
    QuantitativeProperty* quantitative() noexcept { return std::get_if<QuantitativeProperty>(&data_); }
    const QualitativeProperty* qualitative() const noexcept { return std::get_if<QualitativeProperty>(&data_); }
    QualitativeProperty* qualitative() noexcept { return std::get_if<QualitativeProperty>(&data_); }

    void validate() const {
        if (name().empty()) throw ModelError("property name must not be empty");
        if (auto* q = quantitative()) {
            if (q->units.empty()) throw ModelError("property '" + q->name + "': units must not be empty");
            if (q->value) {
                if (auto* l = std::get_if<NumberList>(&*q->value); l && l->empty())
                    throw ModelError("property '" + q->name + "': value list must not be empty");
            }
        } else {
            const auto& p = *qualitative();
            if (!p.verification && !p.degree)
                throw ModelError("property '" + p.name + "': needs a verification expression or a degree");
            if (p.degree && !(*p.degree >= 0.0 && *p.degree <= 1.0))
                throw ModelError("property '" + p.name + "': degree must lie in [0,1]");
            if (p.verification && p.verification->sort() != Sort::Degree)
                throw ModelError("property '" + p.name + "': verification must yield a degree");
        }
    }

    friend bool operator==(const Property&, const Property&) = default;

private:
    std::variant<QuantitativeProperty, QualitativeProperty> data_;
};

/// Named operation. A class-level method may leave its body abstract.
struct Method {
    std::string name;
    std::vector<std::string> parameters;
    std::optional<Expr> body;

    std::size_t arity() const noexcept { return parameters.size(); }

    void validate() const {
        if (name.empty()) throw ModelError("method name must not be empty");
        std::set<std::string_view> seen;
        for (const auto& p : parameters) {
            if (!is_identifier(p) || is_reserved_word(p))
                throw ModelError("method '" + name + "': invalid parameter name '" + p + "'");
            if (!seen.insert(p).second) throw ModelError("method '" + name + "': duplicate parameter '" + p + "'");
        }
        if (body) check_parameters(*body);
    }

    friend bool operator==(const Method&, const Method&) = default;

private:
    void check_parameters(const Expr& e) const {
        if (e.kind() == ExprKind::Parameter && std::ranges::find(parameters, e.name()) == parameters.end())
            throw ModelError("method '" + name + "': body references undeclared parameter '" + e.name() + "'");
        for (const auto& c : e.children()) check_parameters(c);
    }
};

/// Ordered sequence of uniquely named items; shared shape of specifications
/// and signatures.
template <class T>
class NamedList {
public:
    using value_type = T;
    using const_iterator = typename std::vector<T>::const_iterator;

    NamedList() = default;
    NamedList(std::initializer_list<T> items) {
        for (const auto& i : items) add(i);
    }

    const_iterator begin() const noexcept { return items_.begin(); }
    const_iterator end() const noexcept { return items_.end(); }
    std::size_t size() const noexcept { return items_.size(); }
    bool empty() const noexcept { return items_.empty(); }
    const T& operator[](std::size_t i) const { return items_.at(i); }

    const T* find(std::string_view name) const {
        auto it = std::ranges::find_if(items_, [&](const T& t) { return key(t) == name; });
        return it == items_.end() ? nullptr : &*it;
    }
    T* find(std::string_view name) {
        auto it = std::ranges::find_if(items_, [&](const T& t) { return key(t) == name; });
        return it == items_.end() ? nullptr : &*it;
    }
    bool contains(std::string_view name) const { return find(name) != nullptr; }

    /// Appends; throws ModelError on a duplicate name.
    void add(T item) {
        if (contains(key(item))) throw ModelError("duplicate name '" + std::string(key(item)) + "'");
        items_.push_back(std::move(item));
    }
    void remove(std::string_view name) {
        auto it = std::ranges::find_if(items_, [&](const T& t) { return key(t) == name; });
        if (it == items_.end()) throw ModelError("no member named '" + std::string(name) + "'");
        items_.erase(it);
    }
    /// Swaps the named item for `item` in place; the new name must be free.
    void replace(std::string_view name, T item) {
        auto it = std::ranges::find_if(items_, [&](const T& t) { return key(t) == name; });
        if (it == items_.end()) throw ModelError("no member named '" + std::string(name) + "'");
        if (key(item) != name && contains(key(item)))
            throw ModelError("duplicate name '" + std::string(key(item)) + "'");
        *it = std::move(item);
    }

    static std::string_view key(const T& t) {
        if constexpr (requires { t.name(); }) return t.name();
        else return t.name;
    }

    friend bool operator==(const NamedList&, const NamedList&) = default;

private:
    std::vector<T> items_;
};

using Specification = NamedList<Property>;
using Signature = NamedList<Method>;

enum class MemberKind : std::uint8_t { Property, Method };

/// Identifies a member of a specification or signature.
struct MemberKey {
    MemberKind kind;
    std::string name;

    friend auto operator<=>(const MemberKey&, const MemberKey&) = default;
    friend bool operator==(const MemberKey&, const MemberKey&) = default;
};

inline std::string to_string(const MemberKey& k) {
    return (k.kind == MemberKind::Property ? "property " : "method ") + k.name;
}

/// Object A/P(A) with its signature. `clone_index` 0 is the original.
struct ObjectInstance {
    std::string identifier;
    unsigned clone_index = 0;
    Specification specification;
    Signature signature;

    const QuantitativeProperty* find_quantitative(std::string_view name) const {
        const Property* p = specification.find(name);
        return p ? p->quantitative() : nullptr;
    }

    /// "A" for originals, "A#2" for clones.
    std::string label() const {
        return clone_index == 0 ? identifier : identifier + "#" + std::to_string(clone_index);
    }

    void validate() const {
        if (identifier.empty()) throw ModelError("object identifier must not be empty");
        for (const auto& p : specification) {
            p.validate();
            if (auto* q = p.quantitative(); q && !q->value)
                throw ModelError("object '" + label() + "': property '" + q->name + "' needs a concrete value");
        }
        for (const auto& m : signature) m.validate();
    }

    friend bool operator==(const ObjectInstance&, const ObjectInstance&) = default;
};

static_assert(QuantitySource<ObjectInstance>);

/// Members shared by every constituent of a class.
struct Core {
    Specification specification;
    Signature signature;

    bool empty() const noexcept { return specification.empty() && signature.empty(); }
    friend bool operator==(const Core&, const Core&) = default;
};

/// Members typical only of one constituent, labeled by its source.
struct Projection {
    std::string source;
    Specification specification;
    Signature signature;

    bool empty() const noexcept { return specification.empty() && signature.empty(); }
    friend bool operator==(const Projection&, const Projection&) = default;
};

/// A class of objects. Homogeneous classes are the core-only case.
struct ClassDef {
    std::string name;
    Core core;
    std::vector<Projection> projections;

    static ClassDef homogeneous(std::string name, Specification spec, Signature sig) {
        ClassDef c{std::move(name), Core{std::move(spec), std::move(sig)}, {}};
        c.validate();
        return c;
    }

    bool is_homogeneous() const noexcept { return projections.empty(); }

    void validate() const {
        if (name.empty()) throw ModelError("class name must not be empty");
        if (core.empty() && projections.empty())
            throw ModelError("class '" + name + "': core and projections must not both be empty");
        for (const auto& p : core.specification) p.validate();
        for (const auto& m : core.signature) m.validate();
        for (const auto& pr : projections) {
            if (pr.empty()) throw ModelError("class '" + name + "': projection '" + pr.source + "' is empty");
            for (const auto& p : pr.specification) {
                p.validate();
                if (core.specification.contains(p.name()))
                    throw ModelError("class '" + name + "': property '" + p.name() + "' is in both core and projection '"
                                     + pr.source + "'");
            }
            for (const auto& m : pr.signature) {
                m.validate();
                if (core.signature.contains(m.name))
                    throw ModelError("class '" + name + "': method '" + m.name + "' is in both core and projection '"
                                     + pr.source + "'");
            }
        }
    }

    friend bool operator==(const ClassDef&, const ClassDef&) = default;
};

// ---------------------------------------------------------------------------
// Judgments

/// Quantitative: same name and units (values are abstracted away).
/// Qualitative: same name and both opaque or equal verification expressions.
inline bool property_equivalent(const Property& a, const Property& b) {
    if (a.name() != b.name()) return false;
    const auto* qa = a.quantitative();
    const auto* qb = b.quantitative();
    if (qa && qb) return qa->units == qb->units;
    if (qa || qb) return false;
    const auto& va = a.qualitative()->verification;
    const auto& vb = b.qualitative()->verification;
    if (!va && !vb) return true;
    return va && vb && expr_equal(*va, *vb);
}

/// Same name, same arity, and both bodies abstract or equal.
inline bool method_equivalent(const Method& a, const Method& b) {
    if (a.name != b.name || a.arity() != b.arity()) return false;
    if (!a.body && !b.body) return true;
    return a.body && b.body && expr_equal(*a.body, *b.body);
}

namespace detail {

template <class T, class Eq>
bool lists_equivalent(const NamedList<T>& a, const NamedList<T>& b, Eq eq) {
    if (a.size() != b.size()) return false;
    for (const auto& x : a) {
        const auto* y = b.find(NamedList<T>::key(x));
        if (!y || !eq(x, *y)) return false;
    }
    return true;
}

template <class T, class Eq>
bool list_contained(const NamedList<T>& small, const NamedList<T>& big, Eq eq) {
    for (const auto& x : small) {
        const auto* y = big.find(NamedList<T>::key(x));
        if (!y || !eq(x, *y)) return false;
    }
    return true;
}

} // namespace detail

inline bool specifications_equivalent(const Specification& a, const Specification& b) {
    return detail::lists_equivalent(a, b, property_equivalent);
}

inline bool signatures_equivalent(const Signature& a, const Signature& b) {
    return detail::lists_equivalent(a, b, method_equivalent);
}

/// Same properties and behaviour, matched by name regardless of order.
inline bool objects_similar(const ObjectInstance& a, const ObjectInstance& b) {
    return specifications_equivalent(a.specification, b.specification)
        && signatures_equivalent(a.signature, b.signature);
}

/// Core and projections pairwise equivalent (projection order significant,
/// source labels ignored).
inline bool members_equivalent(const ClassDef& a, const ClassDef& b) {
    if (!specifications_equivalent(a.core.specification, b.core.specification)
        || !signatures_equivalent(a.core.signature, b.core.signature)
        || a.projections.size() != b.projections.size())
        return false;
    for (std::size_t i = 0; i < a.projections.size(); ++i) {
        if (!specifications_equivalent(a.projections[i].specification, b.projections[i].specification)
            || !signatures_equivalent(a.projections[i].signature, b.projections[i].signature))
            return false;
    }
    return true;
}

/// Degree to which `o` meets the requirements of the homogeneous class `t`:
/// the minimum of the per-member scores. Compare against `threshold` for a
/// crisp instance-of.
inline double satisfies(const ObjectInstance& o, const ClassDef& t, double threshold = 1.0) {
    if (!t.is_homogeneous()) throw ModelError("satisfies: class '" + t.name + "' is not homogeneous");
    if (!(threshold > 0.0 && threshold <= 1.0)) throw ModelError("satisfies: threshold must lie in (0,1]");

    double degree = 1.0;
    for (const auto& req : t.core.specification) {
        const Property* have = o.specification.find(req.name());
        double score = 0.0;
        if (const auto* q = req.quantitative()) {
            const auto* hq = have ? have->quantitative() : nullptr;
            score = (hq && hq->units == q->units) ? 1.0 : 0.0;
        } else if (const auto& vf = req.qualitative()->verification) {
            try {
                score = evaluate_degree(*vf, EvalContext<ObjectInstance>{&o, {}});
            } catch (const EvalError& e) {
                throw EvalError("property '" + req.name() + "' of class '" + t.name + "': " + e.what(), e.node());
            }
        } else if (const auto* hq = have ? have->qualitative() : nullptr) {
            if (hq->degree) score = *hq->degree;
            else if (hq->verification) score = evaluate_degree(*hq->verification, EvalContext<ObjectInstance>{&o, {}});
        }
        degree = std::min(degree, score);
    }
    for (const auto& req : t.core.signature) {
        const Method* have = o.signature.find(req.name);
        bool ok = have && have->arity() == req.arity();
        if (ok && req.body) ok = have->body && expr_equal(*req.body, *have->body);
        if (!ok) degree = 0.0;
    }
    return degree;
}

/// Proper structural subsumption between homogeneous classes: every member of
/// `general` has an equivalent in `specific`, and `specific` has more.
inline bool subsumes(const ClassDef& general, const ClassDef& specific) {
    if (!general.is_homogeneous() || !specific.is_homogeneous())
        throw ModelError("subsumes: both classes must be homogeneous");
    const Core& g = general.core;
    const Core& s = specific.core;
    if (!detail::list_contained(g.specification, s.specification, property_equivalent)
        || !detail::list_contained(g.signature, s.signature, method_equivalent))
        return false;
    return s.specification.size() + s.signature.size() > g.specification.size() + g.signature.size();
}

/// Class-level abstraction of one object: quantitative values dropped,
/// evaluated degrees dropped where a verification exists, bodies kept.
inline ClassDef induced_class(const ObjectInstance& o) {
    Specification spec;
    for (const auto& p : o.specification) {
        if (const auto* q = p.quantitative()) {
            spec.add(QuantitativeProperty{q->name, std::nullopt, q->units});
        } else {
            QualitativeProperty ql = *p.qualitative();
            if (ql.verification) ql.degree.reset();
            spec.add(std::move(ql));
        }
    }
    return ClassDef{"T(" + o.identifier + ")", Core{std::move(spec), o.signature}, {}};
}

/// Every member key of a specification/signature pair, in declaration order.
inline std::vector<MemberKey> member_keys(const Specification& spec, const Signature& sig) {
    std::vector<MemberKey> keys;
    for (const auto& p : spec) keys.push_back({MemberKind::Property, p.name()});
    for (const auto& m : sig) keys.push_back({MemberKind::Method, m.name});
    return keys;
}

} // namespace oodn
