#pragma once

// JSON documents (.oodn.json) and Graphviz DOT export.

#include <oodn/error.hpp>
#include <oodn/exploiters.hpp>
#include <oodn/expr.hpp>
#include <oodn/model.hpp>
#include <oodn/modifiers.hpp>
#include <oodn/network.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace oodn {

using Json = nlohmann::ordered_json;

inline constexpr int document_version = 1;

// ---------------------------------------------------------------------------
// Writing

namespace detail {

inline Json number_json(double v) {
    if (std::isfinite(v) && v == std::trunc(v) && std::fabs(v) < 9.0e15) return static_cast<std::int64_t>(v);
    return v;
}

inline Json magnitude_json(const Magnitude& m) {
    if (const auto* d = std::get_if<double>(&m)) return number_json(*d);
    Json a = Json::array();
    for (double v : std::get<NumberList>(m)) a.push_back(number_json(v));
    return a;
}

} // namespace detail

inline Json to_json(const Property& p) {
    Json j;
    j["name"] = p.name();
    if (const auto* q = p.quantitative()) {
        j["kind"] = "quantitative";
        if (q->value) j["value"] = detail::magnitude_json(*q->value);
        j["units"] = q->units;
    } else {
        const auto& q2 = *p.qualitative();
        j["kind"] = "qualitative";
        if (q2.verification) j["verify"] = print(*q2.verification);
        if (q2.degree) j["degree"] = detail::number_json(*q2.degree);
    }
    return j;
}

inline Json to_json(const Method& m) {
    Json j;
    j["name"] = m.name;
    j["params"] = m.parameters;
    if (m.body) j["body"] = print(*m.body);
    return j;
}

namespace detail {

inline void members_json(Json& j, const Specification& spec, const Signature& sig) {
    j["properties"] = Json::array();
    for (const auto& p : spec) j["properties"].push_back(to_json(p));
    j["methods"] = Json::array();
    for (const auto& m : sig) j["methods"].push_back(to_json(m));
}

} // namespace detail

inline Json to_json(const ClassDef& c) {
    Json j;
    j["name"] = c.name;
    if (c.is_homogeneous()) {
        detail::members_json(j, c.core.specification, c.core.signature);
        return j;
    }
    Json core;
    detail::members_json(core, c.core.specification, c.core.signature);
    j["core"] = std::move(core);
    j["projections"] = Json::array();
    for (const auto& p : c.projections) {
        Json pj;
        pj["source"] = p.source;
        detail::members_json(pj, p.specification, p.signature);
        j["projections"].push_back(std::move(pj));
    }
    return j;
}

inline Json to_json(const ObjectInstance& o) {
    Json j;
    j["id"] = o.identifier;
    if (o.clone_index) j["clone"] = o.clone_index;
    detail::members_json(j, o.specification, o.signature);
    return j;
}

inline Json to_json(const ModificationFunction& f) {
    Json j;
    j["op"] = edit_name(f);
    std::visit(
        [&](const auto& e) {
            using E = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<E, edit::SetValue>) {
                j["property"] = e.property;
                j["value"] = e.value ? detail::magnitude_json(*e.value) : Json(nullptr);
            } else if constexpr (std::is_same_v<E, edit::SetUnits>) {
                j["property"] = e.property;
                j["units"] = e.units;
            } else if constexpr (std::is_same_v<E, edit::SetExpression>) {
                j["member"] = e.member;
                j["expression"] = print(e.expression);
            } else if constexpr (std::is_same_v<E, edit::AddProperty>) {
                j["property"] = to_json(e.property);
            } else if constexpr (std::is_same_v<E, edit::RemoveProperty>) {
                j["property"] = e.property;
            } else if constexpr (std::is_same_v<E, edit::ReplaceProperty>) {
                j["old"] = e.old_name;
                j["property"] = to_json(e.property);
            } else if constexpr (std::is_same_v<E, edit::AddMethod>) {
                j["method"] = to_json(e.method);
            } else if constexpr (std::is_same_v<E, edit::RemoveMethod>) {
                j["method"] = e.method;
            } else {
                j["old"] = e.old_name;
                j["method"] = to_json(e.method);
            }
        },
        f);
    return j;
}

inline Json to_json(const Modifier& m) {
    Json j;
    j["name"] = m.name;
    j["target_kind"] = to_string(m.target_kind);
    if (m.target) j["target"] = *m.target;
    j["edits"] = Json::array();
    for (const auto& e : m.edits) j["edits"].push_back(to_json(e));
    return j;
}

inline Json to_json(const NodeRef& r) {
    Json j;
    j["kind"] = to_string(r.kind);
    j["name"] = r.name;
    if (r.clone_index) j["clone"] = r.clone_index;
    return j;
}

inline Json to_json(const Relation& r) {
    Json j;
    j["from"] = to_json(r.from);
    j["to"] = to_json(r.to);
    j["kind"] = to_string(r.kind);
    j["provenance"] = to_string(r.provenance);
    return j;
}

/// Canonical document: collections sorted, members in declaration order.
inline Json to_json(const Network& n) {
    Json j;
    j["format"] = "oodn";
    j["version"] = document_version;
    j["exploiters"] = Json::array();
    for (Exploiter e : n.exploiters()) j["exploiters"].push_back(to_string(e));

    std::vector<const ClassDef*> classes;
    for (const auto& c : n.classes()) classes.push_back(&c);
    std::ranges::sort(classes, {}, [](auto* c) { return c->name; });
    j["classes"] = Json::array();
    for (auto* c : classes) j["classes"].push_back(to_json(*c));

    std::vector<const ObjectInstance*> objects;
    for (const auto& o : n.objects()) objects.push_back(&o);
    std::ranges::sort(objects, {}, [](auto* o) { return std::pair(o->identifier, o->clone_index); });
    j["objects"] = Json::array();
    for (auto* o : objects) j["objects"].push_back(to_json(*o));

    std::vector<const Modifier*> modifiers;
    for (const auto& m : n.modifiers()) modifiers.push_back(&m);
    std::ranges::sort(modifiers, {}, [](auto* m) { return m->name; });
    j["modifiers"] = Json::array();
    for (auto* m : modifiers) j["modifiers"].push_back(to_json(*m));

    std::vector<Relation> relations = n.relations();
    std::ranges::sort(relations);
    j["relations"] = Json::array();
    for (const auto& r : relations) j["relations"].push_back(to_json(r));
    return j;
}

inline std::string save_network(const Network& n) { return to_json(n).dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Reading

namespace detail {

/// Cursor into the document that knows its JSON-pointer path.
class Reader {
public:
    Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {}

    const Json& json() const { return j_; }
    const std::string& path() const { return path_; }

    [[noreturn]] void fail(const std::string& msg) const { throw LoadError(path_.empty() ? "/" : path_, msg); }

    Reader at(std::string_view key) const {
        if (!j_.is_object()) fail("expected an object");
        auto it = j_.find(std::string(key));
        if (it == j_.end()) fail("missing field '" + std::string(key) + "'");
        return Reader(*it, path_ + "/" + escape(key));
    }
    std::optional<Reader> maybe(std::string_view key) const {
        if (!j_.is_object()) fail("expected an object");
        auto it = j_.find(std::string(key));
        if (it == j_.end() || it->is_null()) return std::nullopt;
        return Reader(*it, path_ + "/" + escape(key));
    }
    Reader operator[](std::size_t i) const { return Reader(j_.at(i), path_ + "/" + std::to_string(i)); }

    void only(std::initializer_list<std::string_view> allowed) const {
        if (!j_.is_object()) fail("expected an object");
        for (const auto& [k, v] : j_.items()) {
            if (std::ranges::find(allowed, std::string_view(k)) == allowed.end())
                Reader(v, path_ + "/" + escape(k)).fail("unknown field '" + k + "'");
        }
    }

    std::string text() const {
        if (!j_.is_string()) fail("expected a string");
        return j_.get<std::string>();
    }
    std::string name() const {
        std::string s = text();
        if (s.empty()) fail("must not be empty");
        return s;
    }
    double number() const {
        if (!j_.is_number()) fail("expected a number");
        return j_.get<double>();
    }
    unsigned index() const {
        if (!j_.is_number_unsigned() && !(j_.is_number_integer() && j_.get<std::int64_t>() >= 0))
            fail("expected a non-negative integer");
        return j_.get<unsigned>();
    }
    std::size_t size() const {
        if (!j_.is_array()) fail("expected an array");
        return j_.size();
    }
    Magnitude magnitude() const {
        if (j_.is_number()) return number();
        if (!j_.is_array()) fail("expected a number or a list of numbers");
        NumberList out;
        for (std::size_t i = 0; i < j_.size(); ++i) out.push_back((*this)[i].number());
        if (out.empty()) fail("value list must not be empty");
        return out;
    }
    Expr expr() const {
        try {
            return parse(text());
        } catch (const SyntaxError& e) {
            fail(std::string("expression: ") + e.what());
        }
    }

private:
    static std::string escape(std::string_view k) {
        std::string out;
        for (char c : k) {
            if (c == '~') out += "~0";
            else if (c == '/') out += "~1";
            else out += c;
        }
        return out;
    }

    const Json& j_;
    std::string path_;
};

template <class F>
auto guarded(const Reader& r, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const LoadError&) {
        throw;
    } catch (const Error& e) {
        r.fail(e.what());
    }
}

inline Property read_property(const Reader& r) {
    r.only({"name", "kind", "value", "units", "verify", "degree"});
    std::string name = r.at("name").name();
    std::string kind = r.at("kind").text();
    if (kind == "quantitative") {
        if (r.maybe("verify") || r.maybe("degree")) r.fail("quantitative property takes 'value' and 'units' only");
        std::optional<Magnitude> value;
        if (auto v = r.maybe("value")) value = v->magnitude();
        std::string units = r.at("units").name();
        return guarded(r, [&] { return Property::quantitative(name, std::move(value), units); });
    }
    if (kind == "qualitative") {
        if (r.maybe("value") || r.maybe("units")) r.fail("qualitative property takes 'verify' and 'degree' only");
        std::optional<Expr> verify;
        if (auto v = r.maybe("verify")) verify = v->expr();
        std::optional<double> degree;
        if (auto d = r.maybe("degree")) degree = d->number();
        return guarded(r, [&] { return Property::qualitative(name, std::move(verify), degree); });
    }
    r.at("kind").fail("expected \"quantitative\" or \"qualitative\"");
}

inline Method read_method(const Reader& r) {
    r.only({"name", "params", "body"});
    Method m{r.at("name").name(), {}, std::nullopt};
    if (auto ps = r.maybe("params")) {
        for (std::size_t i = 0; i < ps->size(); ++i) m.parameters.push_back((*ps)[i].name());
    }
    if (auto b = r.maybe("body")) m.body = b->expr();
    guarded(r, [&] { m.validate(); });
    return m;
}

inline void read_members(const Reader& r, Specification& spec, Signature& sig) {
    if (auto ps = r.maybe("properties")) {
        for (std::size_t i = 0; i < ps->size(); ++i) {
            Reader item = (*ps)[i];
            Property p = read_property(item);
            if (spec.contains(p.name())) item.at("name").fail("duplicate property '" + p.name() + "'");
            spec.add(std::move(p));
        }
    }
    if (auto ms = r.maybe("methods")) {
        for (std::size_t i = 0; i < ms->size(); ++i) {
            Reader item = (*ms)[i];
            Method m = read_method(item);
            if (sig.contains(m.name)) item.at("name").fail("duplicate method '" + m.name + "'");
            sig.add(std::move(m));
        }
    }
}

inline ClassDef read_class(const Reader& r) {
    ClassDef c{r.at("name").name(), {}, {}};
    if (r.maybe("core") || r.maybe("projections")) {
        r.only({"name", "core", "projections"});
        if (auto core = r.maybe("core")) {
            core->only({"properties", "methods"});
            read_members(*core, c.core.specification, c.core.signature);
        }
        if (auto ps = r.maybe("projections")) {
            for (std::size_t i = 0; i < ps->size(); ++i) {
                Reader p = (*ps)[i];
                p.only({"source", "properties", "methods"});
                Projection pr{p.at("source").name(), {}, {}};
                read_members(p, pr.specification, pr.signature);
                c.projections.push_back(std::move(pr));
            }
        }
    } else {
        r.only({"name", "properties", "methods"});
        read_members(r, c.core.specification, c.core.signature);
    }
    guarded(r, [&] { c.validate(); });
    return c;
}

inline ObjectInstance read_object(const Reader& r) {
    r.only({"id", "clone", "properties", "methods"});
    ObjectInstance o{r.at("id").name(), 0, {}, {}};
    if (auto c = r.maybe("clone")) o.clone_index = c->index();
    read_members(r, o.specification, o.signature);
    guarded(r, [&] { o.validate(); });
    return o;
}

inline ModificationFunction read_edit(const Reader& r) {
    std::string op = r.at("op").text();
    if (op == "setValue") {
        r.only({"op", "property", "value"});
        std::optional<Magnitude> v;
        if (auto val = r.maybe("value")) v = val->magnitude();
        else if (!r.json().contains("value")) r.fail("missing field 'value'");
        return edit::SetValue{r.at("property").name(), std::move(v)};
    }
    if (op == "setUnits") {
        r.only({"op", "property", "units"});
        return edit::SetUnits{r.at("property").name(), r.at("units").name()};
    }
    if (op == "setExpression") {
        r.only({"op", "member", "expression"});
        return edit::SetExpression{r.at("member").name(), r.at("expression").expr()};
    }
    if (op == "addProperty") {
        r.only({"op", "property"});
        return edit::AddProperty{read_property(r.at("property"))};
    }
    if (op == "removeProperty") {
        r.only({"op", "property"});
        return edit::RemoveProperty{r.at("property").name()};
    }
    if (op == "replaceProperty") {
        r.only({"op", "old", "property"});
        return edit::ReplaceProperty{r.at("old").name(), read_property(r.at("property"))};
    }
    if (op == "addMethod") {
        r.only({"op", "method"});
        return edit::AddMethod{read_method(r.at("method"))};
    }
    if (op == "removeMethod") {
        r.only({"op", "method"});
        return edit::RemoveMethod{r.at("method").name()};
    }
    if (op == "replaceMethod") {
        r.only({"op", "old", "method"});
        return edit::ReplaceMethod{r.at("old").name(), read_method(r.at("method"))};
    }
    r.at("op").fail("unknown edit '" + op + "'");
}

inline Modifier read_modifier(const Reader& r) {
    r.only({"name", "target_kind", "target", "edits"});
    Modifier m;
    m.name = r.at("name").name();
    Reader tk = r.at("target_kind");
    auto kind = parse_target_kind(tk.text());
    if (!kind) tk.fail("expected \"object\" or \"class\"");
    m.target_kind = *kind;
    if (auto t = r.maybe("target")) m.target = t->name();
    Reader edits = r.at("edits");
    for (std::size_t i = 0; i < edits.size(); ++i) m.edits.push_back(read_edit(edits[i]));
    guarded(r, [&] { m.validate(); });
    return m;
}

inline NodeRef read_ref(const Reader& r) {
    r.only({"kind", "name", "clone"});
    Reader k = r.at("kind");
    NodeRef ref;
    if (k.text() == "object") ref.kind = NodeKind::Object;
    else if (k.text() == "class") ref.kind = NodeKind::Class;
    else k.fail("expected \"object\" or \"class\"");
    ref.name = r.at("name").name();
    if (auto c = r.maybe("clone")) {
        if (ref.kind == NodeKind::Class) c->fail("classes have no clone index");
        ref.clone_index = c->index();
    }
    return ref;
}

inline Relation read_relation(const Reader& r) {
    r.only({"from", "to", "kind", "provenance"});
    Relation rel{read_ref(r.at("from")), read_ref(r.at("to")), {}, Provenance::Declared};
    rel.kind = guarded(r.at("kind"), [&] { return parse_relation_kind(r.at("kind").name()); });
    if (auto p = r.maybe("provenance")) {
        auto pv = parse_provenance(p->text());
        if (!pv) p->fail("expected \"declared\", \"inferred\" or \"recorded\"");
        rel.provenance = *pv;
    }
    return rel;
}

} // namespace detail

/// Builds a network from a parsed document, validating every invariant.
inline Network from_json(const Json& doc) {
    detail::Reader root(doc, "");
    root.only({"format", "version", "exploiters", "classes", "objects", "modifiers", "relations"});
    if (root.at("format").text() != "oodn") root.at("format").fail("expected \"oodn\"");
    if (root.at("version").index() != document_version)
        root.at("version").fail("unsupported version (expected " + std::to_string(document_version) + ")");

    Network n;
    if (auto ex = root.maybe("exploiters")) {
        std::set<Exploiter> enabled;
        for (std::size_t i = 0; i < ex->size(); ++i) {
            auto e = parse_exploiter((*ex)[i].text());
            if (!e) (*ex)[i].fail("unknown exploiter");
            enabled.insert(*e);
        }
        n = n.with_exploiters(std::move(enabled));
    }
    auto each = [&](std::string_view key, auto&& fn) {
        if (auto list = root.maybe(key)) {
            for (std::size_t i = 0; i < list->size(); ++i) fn((*list)[i]);
        }
    };
    // Nodes before modifiers and relations so references can resolve.
    each("classes", [&](const detail::Reader& r) {
        auto c = detail::read_class(r);
        n = detail::guarded(r, [&] { return n.add_class(std::move(c)); });
    });
    each("objects", [&](const detail::Reader& r) {
        auto o = detail::read_object(r);
        n = detail::guarded(r, [&] { return n.add_object(std::move(o)); });
    });
    each("modifiers", [&](const detail::Reader& r) {
        auto m = detail::read_modifier(r);
        n = detail::guarded(r, [&] { return n.add_modifier(std::move(m)); });
    });
    each("relations", [&](const detail::Reader& r) {
        auto rel = detail::read_relation(r);
        n = detail::guarded(r, [&] { return n.declare_relation(std::move(rel)); });
    });
    return n;
}

inline Network load_network(std::string_view text) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw LoadError("/", std::string("malformed JSON: ") + e.what());
    }
    return from_json(doc);
}

inline Network load_network_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("/", "cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_network(buf.str());
}

// ---------------------------------------------------------------------------
// DOT export

/// An exploiter application whose result does not exist; drawn dashed.
struct AbsentAttempt {
    Exploiter op;
    std::vector<NodeRef> operands;
    std::string reason;
};

namespace detail {

inline std::string dot_quote(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        if (c == '\n') {
            out += "\\n";
            continue;
        }
        out += c;
    }
    return out + "\"";
}

inline std::string dot_id(const NodeRef& r) { return dot_quote(std::string(to_string(r.kind)) + ":" + r.label()); }

} // namespace detail

/// Objects are ellipses, classes boxes; edges carry their relation kind.
inline std::string export_dot(const Network& n, std::span<const AbsentAttempt> absent = {}) {
    std::ostringstream out;
    out << "digraph oodn {\n";
    for (const auto& r : n.nodes()) {
        out << "  " << detail::dot_id(r) << " [label=" << detail::dot_quote(r.label())
            << ", shape=" << (r.kind == NodeKind::Object ? "ellipse" : "box") << "];\n";
    }
    std::vector<Relation> rels = n.relations();
    std::ranges::sort(rels);
    for (const auto& r : rels) {
        out << "  " << detail::dot_id(r.from) << " -> " << detail::dot_id(r.to)
            << " [label=" << detail::dot_quote(to_string(r.kind)) << "];\n";
    }
    for (std::size_t i = 0; i < absent.size(); ++i) {
        const auto& a = absent[i];
        std::string names;
        for (const auto& o : a.operands) names += (names.empty() ? "" : ", ") + o.label();
        std::string id = detail::dot_quote("absent:" + std::to_string(i));
        out << "  " << id << " [label=" << detail::dot_quote(std::string(to_string(a.op)) + "(" + names + ")")
            << ", shape=box, style=dashed];\n";
        for (const auto& o : a.operands) {
            out << "  " << detail::dot_id(o) << " -> " << id << " [label=\"operand-of\", style=dashed];\n";
        }
    }
    out << "}\n";
    return out.str();
}

} // namespace oodn
