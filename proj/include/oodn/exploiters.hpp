#pragma once

// Set-theoretic exploiters over classes and objects. Operands are never
// modified; a result that "does not exist" is an absent OperationResult.

#include <oodn/error.hpp>
#include <oodn/model.hpp>

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace oodn {

enum class Exploiter : std::uint8_t { Union, Intersection, Difference, SymmetricDifference, Clone };

inline constexpr Exploiter all_exploiters[] = {Exploiter::Union, Exploiter::Intersection, Exploiter::Difference,
                                               Exploiter::SymmetricDifference, Exploiter::Clone};

inline std::string_view to_string(Exploiter e) {
    switch (e) {
        case Exploiter::Union: return "union";
        case Exploiter::Intersection: return "intersection";
        case Exploiter::Difference: return "difference";
        case Exploiter::SymmetricDifference: return "symmetric-difference";
        case Exploiter::Clone: return "clone";
    }
    return "?";
}

inline std::optional<Exploiter> parse_exploiter(std::string_view s) {
    for (Exploiter e : all_exploiters) {
        if (to_string(e) == s) return e;
    }
    return std::nullopt;
}

/// Either a class (plus, for operations over objects, the object set it
/// types) or the reason the result does not exist.
struct OperationResult {
    std::optional<ClassDef> cls;
    std::vector<ObjectInstance> objects;
    std::string reason;

    bool present() const noexcept { return cls.has_value(); }

    static OperationResult absent(std::string why) { return OperationResult{std::nullopt, {}, std::move(why)}; }
    static OperationResult of(ClassDef c) {
        c.validate();
        return OperationResult{std::move(c), {}, {}};
    }
};

namespace detail {

inline std::string derived_name(std::string_view op, std::span<const std::string> operands) {
    std::string out(op);
    out += '(';
    for (std::size_t i = 0; i < operands.size(); ++i) {
        if (i) out += ", ";
        out += operands[i];
    }
    out += ')';
    return out;
}

inline void require_homogeneous(const ClassDef& c, std::string_view op) {
    if (!c.is_homogeneous())
        throw ModelError(std::string(op) + ": operand '" + c.name + "' must be homogeneous (core only)");
}

/// Members shared by all operands, and each operand's leftovers.
struct Split {
    Core shared;
    std::vector<Core> unmatched;
};

template <class T, class Eq>
bool matched_everywhere(const T& item, std::span<const ClassDef> operands, std::size_t list, Eq eq) {
    for (std::size_t i = 1; i < operands.size(); ++i) {
        const T* other = nullptr;
        if constexpr (std::is_same_v<T, Property>) other = operands[i].core.specification.find(item.name());
        else other = operands[i].core.signature.find(item.name);
        if (!other || !eq(item, *other)) return false;
    }
    (void)list;
    return true;
}

inline Split split(std::span<const ClassDef> operands) {
    Split out;
    const Core& first = operands[0].core;
    for (const auto& p : first.specification) {
        if (!matched_everywhere(p, operands, 0, property_equivalent)) continue;
        Property rep = p;
        // A class-level value survives only if every operand constrains it
        // to the same value.
        if (auto* q = rep.quantitative(); q && q->value) {
            for (std::size_t i = 1; i < operands.size(); ++i) {
                if (operands[i].core.specification.find(p.name())->quantitative()->value != q->value) {
                    q->value.reset();
                    break;
                }
            }
        }
        out.shared.specification.add(std::move(rep));
    }
    for (const auto& m : first.signature) {
        if (matched_everywhere(m, operands, 0, method_equivalent)) out.shared.signature.add(m);
    }
    for (const auto& op : operands) {
        Core rest;
        for (const auto& p : op.core.specification) {
            if (!out.shared.specification.contains(p.name())) rest.specification.add(p);
        }
        for (const auto& m : op.core.signature) {
            if (!out.shared.signature.contains(m.name)) rest.signature.add(m);
        }
        out.unmatched.push_back(std::move(rest));
    }
    return out;
}

inline Projection as_projection(std::string source, Core c) {
    return Projection{std::move(source), std::move(c.specification), std::move(c.signature)};
}

} // namespace detail

/// Union: core of members equivalent across all operands, plus one projection
/// per operand (in operand order) holding its unmatched members. Always
/// exists. `labels` name the projections; defaults to the class names.
inline OperationResult class_union(std::span<const ClassDef> operands, std::span<const std::string> labels = {},
                                   std::optional<std::string> name = std::nullopt) {
    if (operands.size() < 2) throw ModelError("union needs at least two operands");
    if (!labels.empty() && labels.size() != operands.size())
        throw ModelError("union: one label per operand required");
    std::vector<std::string> names;
    for (const auto& c : operands) {
        detail::require_homogeneous(c, "union");
        names.push_back(c.name);
    }
    detail::Split s = detail::split(operands);
    ClassDef result{name ? *name : detail::derived_name("union", names), std::move(s.shared), {}};
    for (std::size_t i = 0; i < operands.size(); ++i) {
        if (s.unmatched[i].empty()) continue;
        result.projections.push_back(detail::as_projection(labels.empty() ? names[i] : labels[i],
                                                           std::move(s.unmatched[i])));
    }
    return OperationResult::of(std::move(result));
}

/// Intersection: the equivalent members only. Absent when there are none.
inline OperationResult class_intersection(const ClassDef& a, const ClassDef& b,
                                          std::optional<std::string> name = std::nullopt) {
    detail::require_homogeneous(a, "intersection");
    detail::require_homogeneous(b, "intersection");
    const ClassDef ops[] = {a, b};
    detail::Split s = detail::split(ops);
    if (s.shared.empty())
        return OperationResult::absent("intersection of '" + a.name + "' and '" + b.name
                                       + "' does not exist: no equivalent members");
    const std::string names[] = {a.name, b.name};
    return OperationResult::of(ClassDef{name ? *name : detail::derived_name("intersection", names),
                                        std::move(s.shared), {}});
}

/// Difference: no core, one projection with a's unmatched members. Absent
/// when every member of a has an equivalent in b.
inline OperationResult class_difference(const ClassDef& a, const ClassDef& b,
                                        std::optional<std::string> name = std::nullopt) {
    detail::require_homogeneous(a, "difference");
    detail::require_homogeneous(b, "difference");
    const ClassDef ops[] = {a, b};
    detail::Split s = detail::split(ops);
    if (s.unmatched[0].empty())
        return OperationResult::absent("difference of '" + a.name + "' and '" + b.name
                                       + "' does not exist: every member is matched");
    const std::string names[] = {a.name, b.name};
    ClassDef result{name ? *name : detail::derived_name("difference", names), {}, {}};
    result.projections.push_back(detail::as_projection(a.name, std::move(s.unmatched[0])));
    return OperationResult::of(std::move(result));
}

/// Symmetric difference: a's unmatched members, then b's. Absent when the two
/// are member-for-member equivalent.
inline OperationResult class_symmetric_difference(const ClassDef& a, const ClassDef& b,
                                                  std::optional<std::string> name = std::nullopt) {
    detail::require_homogeneous(a, "symmetric-difference");
    detail::require_homogeneous(b, "symmetric-difference");
    const ClassDef ops[] = {a, b};
    detail::Split s = detail::split(ops);
    if (s.unmatched[0].empty() && s.unmatched[1].empty())
        return OperationResult::absent("symmetric difference of '" + a.name + "' and '" + b.name
                                       + "' does not exist: the classes are equivalent");
    const std::string names[] = {a.name, b.name};
    ClassDef result{name ? *name : detail::derived_name("symmetric-difference", names), {}, {}};
    if (!s.unmatched[0].empty()) result.projections.push_back(detail::as_projection(a.name, std::move(s.unmatched[0])));
    if (!s.unmatched[1].empty()) result.projections.push_back(detail::as_projection(b.name, std::move(s.unmatched[1])));
    return OperationResult::of(std::move(result));
}

/// Indexed copy of `o`. Throws if `existing` already holds that index for
/// the same identifier.
inline ObjectInstance clone_object(const ObjectInstance& o, unsigned index,
                                   std::span<const ObjectInstance> existing = {}) {
    if (index == 0) throw ModelError("clone index must be positive");
    for (const auto& e : existing) {
        if (e.identifier == o.identifier && e.clone_index == index)
            throw ModelError("clone index " + std::to_string(index) + " already used for '" + o.identifier + "'");
    }
    ObjectInstance copy = o;
    copy.clone_index = index;
    return copy;
}

/// Union over objects: the object multiset (repeats become indexed clones)
/// typed by the union of the objects' induced classes.
inline OperationResult object_union(std::span<const ObjectInstance> objects,
                                    std::optional<std::string> name = std::nullopt) {
    if (objects.size() < 2) throw ModelError("union needs at least two objects");
    std::map<std::string, std::set<unsigned>> used;
    for (const auto& o : objects) used[o.identifier].insert(o.clone_index);

    std::vector<ObjectInstance> members;
    std::set<std::pair<std::string, unsigned>> seen;
    for (const auto& o : objects) {
        if (seen.insert({o.identifier, o.clone_index}).second) {
            members.push_back(o);
            continue;
        }
        unsigned next = *used[o.identifier].rbegin() + 1;
        used[o.identifier].insert(next);
        seen.insert({o.identifier, next});
        members.push_back(clone_object(o, next));
    }

    std::vector<ClassDef> classes;
    std::vector<std::string> labels;
    for (const auto& o : members) {
        classes.push_back(induced_class(o));
        labels.push_back(o.label());
    }
    OperationResult r = class_union(classes, labels, name ? name : std::optional(detail::derived_name("union", labels)));
    r.objects = std::move(members);
    return r;
}

/// Every (kind, name) member key of a class, core first.
inline std::set<MemberKey> class_member_keys(const ClassDef& c) {
    std::set<MemberKey> out;
    for (auto& k : member_keys(c.core.specification, c.core.signature)) out.insert(k);
    for (const auto& p : c.projections) {
        for (auto& k : member_keys(p.specification, p.signature)) out.insert(k);
    }
    return out;
}

} // namespace oodn
