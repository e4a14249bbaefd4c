#include "medc/transform.hpp"
#include "medc/errors.hpp"
#include "medc/model_json.hpp"
#include "medc/util.hpp"

#include <algorithm>
#include <set>

namespace medc {

namespace {

const TagSpec* find_tag(const std::vector<TagSpec>& v, const std::string& tag) {
    for (const auto& t : v) {
        if (t.tag == tag) return &t;
    }
    return nullptr;
}

// annotated unit when present, otherwise the concept itself stands in
std::string effective_unit(const TagSpec& t) {
    return t.unit.empty() ? t.concept_id : t.unit;
}

// the tag's declared-format decomposition; unique-by-concept fallback when the
// tag carries no format id
const FormatDecomposition* decomp_for_tag(const FormatDatabase& fmts, const TagSpec& t) {
    if (!t.format.empty()) return fmts.find(t.concept_id, t.format);
    auto all = fmts.for_concept(t.concept_id);
    return all.size() == 1 ? all.front() : nullptr;
}

std::string label_text(const Ontology& o, const TagSpec& t) {
    return join(o.display_labels(t.concept_id), " ") + " " + t.tag;
}

} // namespace

Message Message::parse(const std::string& document) {
    json j = parse_json(document, "message");
    if (!j.is_object()) throw ParseError("message: must be a JSON object of tag -> value");
    Message m;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!it.value().is_string()) {
            throw ParseError("message: value of tag \"" + it.key() + "\" must be a string");
        }
        m.values[it.key()] = it.value().get<std::string>();
    }
    return m;
}

Message Message::load_file(const std::string& path) {
    return parse(read_file(path));
}

json Message::to_json() const {
    json j = json::object();
    for (const auto& [k, v] : values) j[k] = v;
    return j;
}

std::string Message::dump() const {
    return to_json().dump(2) + "\n";
}

namespace {

json step_to_json(const TransformStep& s) {
    json j;
    switch (s.kind) {
        case TransformStep::Kind::Copy:
            j["kind"] = "copy";
            j["source"] = s.source_tag;
            break;
        case TransformStep::Kind::Parse:
            j["kind"] = "parse";
            j["source"] = s.source_tag;
            j["concept"] = s.decomp_concept;
            j["format"] = s.decomp_format;
            break;
        case TransformStep::Kind::Assemble: {
            j["kind"] = "assemble";
            j["concept"] = s.decomp_concept;
            j["format"] = s.decomp_format;
            json parts = json::array();
            for (const auto& p : s.part_sources) {
                json pj = {{"part", p.part}, {"tag", p.tag}};
                if (!p.source_part.empty()) pj["source_part"] = p.source_part;
                parts.push_back(pj);
            }
            j["parts"] = parts;
            break;
        }
        case TransformStep::Kind::Convert:
            j["kind"] = "convert";
            j["from"] = s.from_unit;
            j["to"] = s.to_unit;
            j["expression"] = s.expression;
            break;
        case TransformStep::Kind::Lookup:
            j["kind"] = "lookup";
            j["table"] = s.table;
            break;
    }
    return j;
}

TransformStep step_from_json(const json& j, const std::string& context) {
    TransformStep s;
    std::string kind = require_string(j, "kind", context);
    if (kind == "copy") {
        reject_unknown_keys(j, {"kind", "source"}, context);
        s.kind = TransformStep::Kind::Copy;
        s.source_tag = require_string(j, "source", context);
    } else if (kind == "parse") {
        reject_unknown_keys(j, {"kind", "source", "concept", "format"}, context);
        s.kind = TransformStep::Kind::Parse;
        s.source_tag = require_string(j, "source", context);
        s.decomp_concept = require_string(j, "concept", context);
        s.decomp_format = require_string(j, "format", context);
    } else if (kind == "assemble") {
        reject_unknown_keys(j, {"kind", "concept", "format", "parts"}, context);
        s.kind = TransformStep::Kind::Assemble;
        s.decomp_concept = require_string(j, "concept", context);
        s.decomp_format = require_string(j, "format", context);
        if (!j.contains("parts") || !j.at("parts").is_array()) {
            throw ParseError(context + ": assemble step needs a parts array");
        }
        for (const json& pj : j.at("parts")) {
            reject_unknown_keys(pj, {"part", "tag", "source_part"}, context + ".parts");
            TransformStep::PartSource ps;
            ps.part = require_string(pj, "part", context + ".parts");
            ps.tag = require_string(pj, "tag", context + ".parts");
            ps.source_part = optional_string(pj, "source_part", context + ".parts");
            s.part_sources.push_back(std::move(ps));
        }
    } else if (kind == "convert") {
        reject_unknown_keys(j, {"kind", "from", "to", "expression"}, context);
        s.kind = TransformStep::Kind::Convert;
        s.from_unit = require_string(j, "from", context);
        s.to_unit = require_string(j, "to", context);
        s.expression = require_string(j, "expression", context);
        Expression::parse(s.expression); // must parse now, not at apply time
    } else if (kind == "lookup") {
        reject_unknown_keys(j, {"kind", "table"}, context);
        s.kind = TransformStep::Kind::Lookup;
        s.table = require_string(j, "table", context);
    } else {
        throw ParseError(context + ": unknown step kind \"" + kind + "\"");
    }
    return s;
}

} // namespace

json TransformationSpec::to_json() const {
    json jt = json::array();
    for (const auto& t : tags) {
        json steps = json::array();
        for (const auto& s : t.steps) steps.push_back(step_to_json(s));
        jt.push_back({{"target", t.target_tag}, {"sources", t.source_tags}, {"steps", steps}});
    }
    json jd = json::array();
    for (const auto& d : decompositions) jd.push_back(decomposition_to_json(d));
    return {{"service", service_id},
            {"operation", operation_id},
            {"round_digits", round_digits},
            {"tags", jt},
            {"decompositions", jd},
            {"tables", tables}};
}

TransformationSpec TransformationSpec::from_json(const json& j) {
    std::string ctx = "transformation spec";
    reject_unknown_keys(j, {"service", "operation", "round_digits", "tags", "decompositions", "tables"}, ctx);
    TransformationSpec spec;
    spec.service_id = require_string(j, "service", ctx);
    spec.operation_id = require_string(j, "operation", ctx);
    if (j.contains("round_digits")) {
        if (!j.at("round_digits").is_number_integer()) throw ParseError(ctx + ": round_digits must be an integer");
        spec.round_digits = j.at("round_digits").get<int>();
        if (spec.round_digits < 0 || spec.round_digits > 18) {
            throw ParseError(ctx + ": round_digits out of range");
        }
    }
    if (j.contains("decompositions")) {
        if (!j.at("decompositions").is_array()) throw ParseError(ctx + ": decompositions must be an array");
        for (const json& dj : j.at("decompositions")) {
            spec.decompositions.push_back(decomposition_from_json(dj, ctx + ".decompositions"));
        }
    }
    if (j.contains("tables")) {
        if (!j.at("tables").is_object()) throw ParseError(ctx + ": tables must be an object");
        for (auto it = j.at("tables").begin(); it != j.at("tables").end(); ++it) {
            spec.tables[it.key()] = string_map_from_json(it.value(), ctx + ".tables." + it.key());
        }
    }
    if (!j.contains("tags") || !j.at("tags").is_array()) throw ParseError(ctx + ": missing tags array");
    std::set<std::string> seen;
    for (const json& tj : j.at("tags")) {
        reject_unknown_keys(tj, {"target", "sources", "steps"}, ctx + ".tags");
        TagTransformation t;
        t.target_tag = require_string(tj, "target", ctx + ".tags");
        if (!seen.insert(t.target_tag).second) {
            throw ParseError(ctx + ": duplicate target tag \"" + t.target_tag + "\"");
        }
        if (tj.contains("sources")) {
            if (!tj.at("sources").is_array()) throw ParseError(ctx + ": sources must be an array");
            for (const json& sj : tj.at("sources")) {
                if (!sj.is_string()) throw ParseError(ctx + ": source tags must be strings");
                t.source_tags.push_back(sj.get<std::string>());
            }
        }
        if (!tj.contains("steps") || !tj.at("steps").is_array()) {
            throw ParseError(ctx + ": tag \"" + t.target_tag + "\" needs a steps array");
        }
        for (const json& sj : tj.at("steps")) {
            TransformStep s = step_from_json(sj, ctx + " tag \"" + t.target_tag + "\"");
            if (s.kind == TransformStep::Kind::Parse || s.kind == TransformStep::Kind::Assemble) {
                spec.decomposition(s.decomp_concept, s.decomp_format); // throws if not embedded
            }
            if (s.kind == TransformStep::Kind::Lookup && !spec.tables.count(s.table)) {
                throw ParseError(ctx + ": step references table \"" + s.table + "\" not embedded in spec");
            }
            t.steps.push_back(std::move(s));
        }
        spec.tags.push_back(std::move(t));
    }
    return spec;
}

TransformationSpec TransformationSpec::parse(const std::string& document) {
    return from_json(parse_json(document, "transformation spec"));
}

TransformationSpec TransformationSpec::load_file(const std::string& path) {
    return parse(read_file(path));
}

const FormatDecomposition& TransformationSpec::decomposition(const std::string& concept_id,
                                                             const std::string& format) const {
    for (const auto& d : decompositions) {
        if (d.concept_id == concept_id && d.format == format) return d;
    }
    throw ParseError("transformation spec: decomposition " + concept_id + "/" + format + " not embedded");
}

BindOutcome bind_concepts(const std::vector<TagSpec>& required,
                          const std::vector<TagSpec>& available,
                          const Ontology& o, const FormatDatabase& fmts,
                          const UnitDatabase& units, const ReconConfig& cfg) {
    BindOutcome out;
    for (const TagSpec& r : required) {
        // 1) direct logic match, best degree wins
        const TagSpec* best = nullptr;
        Degree best_degree = Degree::Fail;
        for (const TagSpec& s : available) {
            Degree d = o.degree_of_match(r.concept_id, s.concept_id);
            if (d == Degree::Fail) continue;
            if (!best || cfg.degrees.value(d) > cfg.degrees.value(best_degree) ||
                (cfg.degrees.value(d) == cfg.degrees.value(best_degree) && s.tag < best->tag)) {
                best = &s;
                best_degree = d;
            }
        }
        if (best) {
            Binding b;
            b.kind = Binding::Kind::Direct;
            b.target_tag = r.tag;
            b.source_tags = {best->tag};
            b.degree = best_degree;
            out.bound.push_back(std::move(b));
            continue;
        }

        // 2) sibling units under a common measurable ancestor, conversion known
        const TagSpec* sibling = nullptr;
        for (const TagSpec& s : available) {
            std::string su = effective_unit(s), ru = effective_unit(r);
            if (su == ru || !o.has_concept(su) || !o.has_concept(ru)) continue;
            if (!o.share_ancestor(su, ru)) continue;
            if (!units.has_conversion(su, ru)) continue;
            if (!sibling || s.tag < sibling->tag) sibling = &s;
        }
        if (sibling) {
            Binding b;
            b.kind = Binding::Kind::Direct;
            b.target_tag = r.tag;
            b.source_tags = {sibling->tag};
            b.degree = Degree::Fail;
            b.unit_sibling = true;
            out.bound.push_back(std::move(b));
            continue;
        }

        // 3) composite coverage through the required tag's decomposition
        if (const FormatDecomposition* td = decomp_for_tag(fmts, r)) {
            std::vector<Binding::PartCover> covers;
            bool all_covered = true;
            for (const auto& part : td->parts) {
                const TagSpec* cover_tag = nullptr;
                std::string cover_part;
                double cover_value = -1.0;
                bool cover_direct = false;
                auto consider = [&](const TagSpec& s, const std::string& via, Degree d) {
                    double v = cfg.degrees.value(d);
                    bool direct = via.empty();
                    bool better = false;
                    if (v > cover_value) better = true;
                    else if (v == cover_value && cover_tag) {
                        if (direct != cover_direct) better = direct;
                        else if (s.tag != cover_tag->tag) better = s.tag < cover_tag->tag;
                        else better = via < cover_part;
                    }
                    if (better) {
                        cover_tag = &s;
                        cover_part = via;
                        cover_value = v;
                        cover_direct = direct;
                    }
                };
                for (const TagSpec& s : available) {
                    Degree d = o.degree_of_match(part.concept_id, s.concept_id);
                    if (d != Degree::Fail) consider(s, "", d);
                    if (const FormatDecomposition* sd = decomp_for_tag(fmts, s)) {
                        for (const auto& sp : sd->parts) {
                            Degree pd = o.degree_of_match(part.concept_id, sp.concept_id);
                            if (pd != Degree::Fail) consider(s, sp.concept_id, pd);
                        }
                    }
                }
                if (!cover_tag) {
                    all_covered = false;
                    break;
                }
                covers.push_back({part.concept_id, cover_tag->tag, cover_part});
            }
            if (all_covered) {
                Binding b;
                b.kind = Binding::Kind::Composite;
                b.target_tag = r.tag;
                b.parts = std::move(covers);
                b.target_decomp = td;
                for (const auto& c : b.parts) {
                    if (std::find(b.source_tags.begin(), b.source_tags.end(), c.tag) == b.source_tags.end()) {
                        b.source_tags.push_back(c.tag);
                    }
                }
                out.bound.push_back(std::move(b));
                continue;
            }
        }

        // 4) hybrid fallback on label similarity
        const TagSpec* syn = nullptr;
        double syn_sim = 0.0;
        TokenBag rb = tokenize(label_text(o, r));
        for (const TagSpec& s : available) {
            double sim = similarity(rb, tokenize(label_text(o, s)), cfg.metric);
            if (!syn || sim > syn_sim || (sim == syn_sim && s.tag < syn->tag)) {
                syn = &s;
                syn_sim = sim;
            }
        }
        if (syn && syn_sim >= cfg.sigma) {
            Binding b;
            b.kind = Binding::Kind::Direct;
            b.target_tag = r.tag;
            b.source_tags = {syn->tag};
            b.degree = Degree::Fail;
            b.syntactic = true;
            out.bound.push_back(std::move(b));
            continue;
        }

        out.unbound.push_back(r.tag);
    }
    return out;
}

std::vector<TransformStep> derive_format_steps(const Binding& b, const TagSpec& target,
                                               const std::vector<TagSpec>& available,
                                               const Ontology& o, const FormatDatabase& fmts) {
    std::vector<TransformStep> steps;

    if (b.kind == Binding::Kind::Composite) {
        // one Parse per source whose own parts are consumed, then the Assemble
        std::vector<std::string> parse_order;
        for (const auto& c : b.parts) {
            if (c.source_part.empty()) continue;
            if (std::find(parse_order.begin(), parse_order.end(), c.tag) == parse_order.end()) {
                parse_order.push_back(c.tag);
            }
        }
        for (const auto& tag : parse_order) {
            const TagSpec* s = find_tag(available, tag);
            const FormatDecomposition* sd = s ? decomp_for_tag(fmts, *s) : nullptr;
            if (!sd) throw UnknownFormatError("no decomposition for source tag \"" + tag + "\"");
            TransformStep ps;
            ps.kind = TransformStep::Kind::Parse;
            ps.source_tag = tag;
            ps.decomp_concept = sd->concept_id;
            ps.decomp_format = sd->format;
            steps.push_back(std::move(ps));
        }
        TransformStep as;
        as.kind = TransformStep::Kind::Assemble;
        as.decomp_concept = b.target_decomp->concept_id;
        as.decomp_format = b.target_decomp->format;
        for (const auto& c : b.parts) as.part_sources.push_back({c.part, c.tag, c.source_part});
        steps.push_back(std::move(as));
        return steps;
    }

    const TagSpec* s = find_tag(available, b.source_tags.front());
    if (!s) throw UnknownFormatError("source tag \"" + b.source_tags.front() + "\" not among available tags");

    if (target.format.empty() || target.format == s->format) {
        TransformStep cp;
        cp.kind = TransformStep::Kind::Copy;
        cp.source_tag = s->tag;
        steps.push_back(std::move(cp));
        return steps;
    }

    if (!fmts.has_format(target.format)) {
        throw UnknownFormatError("format \"" + target.format + "\" absent from decomposition database");
    }
    const FormatDecomposition* td = fmts.find(target.concept_id, target.format);
    if (!td) {
        throw UnknownFormatError("no decomposition for " + target.concept_id + "/" + target.format);
    }
    const FormatDecomposition* sd = decomp_for_tag(fmts, *s);
    if (!sd) {
        throw UnknownFormatError("no decomposition for source tag \"" + s->tag + "\" (" +
                                 s->concept_id + "/" + s->format + ")");
    }

    TransformStep ps;
    ps.kind = TransformStep::Kind::Parse;
    ps.source_tag = s->tag;
    ps.decomp_concept = sd->concept_id;
    ps.decomp_format = sd->format;
    steps.push_back(std::move(ps));

    TransformStep as;
    as.kind = TransformStep::Kind::Assemble;
    as.decomp_concept = td->concept_id;
    as.decomp_format = td->format;
    for (const auto& part : td->parts) {
        const FormatDecomposition::Part* from = nullptr;
        double from_value = -1.0;
        for (const auto& sp : sd->parts) {
            Degree d = o.degree_of_match(part.concept_id, sp.concept_id);
            if (d == Degree::Fail) continue;
            double v = DegreeValues{}.value(d);
            if (v > from_value || (v == from_value && from && sp.concept_id < from->concept_id)) {
                from = &sp;
                from_value = v;
            }
        }
        if (!from) {
            throw UnknownFormatError("part " + part.concept_id + " of " + target.format +
                                     " not derivable from " + sd->format);
        }
        as.part_sources.push_back({part.concept_id, s->tag, from->concept_id});
    }
    steps.push_back(std::move(as));
    return steps;
}

std::optional<TransformStep> derive_unit_step(const std::string& from_unit,
                                              const std::string& to_unit,
                                              const UnitDatabase& units) {
    if (from_unit == to_unit || from_unit.empty() || to_unit.empty()) return std::nullopt;
    TransformStep s;
    s.kind = TransformStep::Kind::Convert;
    s.from_unit = from_unit;
    s.to_unit = to_unit;
    if (const UnitConversion* direct = units.find(from_unit, to_unit)) {
        s.expression = direct->expression_text;
    } else {
        s.expression = units.derive(from_unit, to_unit).render_text(); // inverted reverse entry
    }
    return s;
}

GenResult generate_transformation_spec(const OpRef& target, const std::vector<TagSpec>& target_inputs,
                                       const std::vector<TagSpec>& upstream,
                                       const Ontology& o, const FormatDatabase& fmts,
                                       const UnitDatabase& units, const LookupTables& tables,
                                       const ReconConfig& cfg) {
    GenResult res;
    TransformationSpec spec;
    spec.service_id = target.service_id;
    spec.operation_id = target.operation_id;
    spec.round_digits = cfg.round_digits;

    BindOutcome bo = bind_concepts(target_inputs, upstream, o, fmts, units, cfg);
    res.unbound = bo.unbound;

    std::set<std::pair<std::string, std::string>> used_decomps;
    for (const Binding& b : bo.bound) {
        const TagSpec* rt = find_tag(target_inputs, b.target_tag);
        try {
            TagTransformation tt;
            tt.target_tag = b.target_tag;
            tt.source_tags = b.source_tags;
            tt.steps = derive_format_steps(b, *rt, upstream, o, fmts);

            if (b.kind == Binding::Kind::Direct) {
                const TagSpec* s = find_tag(upstream, b.source_tags.front());
                std::string fu, tu;
                if (b.unit_sibling) {
                    fu = effective_unit(*s);
                    tu = effective_unit(*rt);
                } else if (!s->unit.empty() && !rt->unit.empty()) {
                    fu = s->unit;
                    tu = rt->unit;
                }
                if (auto conv = derive_unit_step(fu, tu, units)) tt.steps.push_back(*conv);
            }

            if (!rt->lookup.empty()) {
                if (!tables.has_table(rt->lookup)) {
                    throw ParseError("activity input \"" + rt->tag + "\" names unknown lookup table \"" +
                                     rt->lookup + "\"");
                }
                TransformStep ls;
                ls.kind = TransformStep::Kind::Lookup;
                ls.table = rt->lookup;
                tt.steps.push_back(std::move(ls));
                spec.tables[rt->lookup] = tables.table(rt->lookup);
            }

            for (const auto& st : tt.steps) {
                if (st.kind == TransformStep::Kind::Parse || st.kind == TransformStep::Kind::Assemble) {
                    used_decomps.insert({st.decomp_concept, st.decomp_format});
                }
            }
            spec.tags.push_back(std::move(tt));
        } catch (const NoConversionError&) {
            res.unbound.push_back(b.target_tag);
        } catch (const UnknownFormatError&) {
            res.unbound.push_back(b.target_tag);
        }
    }

    std::sort(res.unbound.begin(), res.unbound.end());
    res.unbound.erase(std::unique(res.unbound.begin(), res.unbound.end()), res.unbound.end());
    if (!res.unbound.empty()) return res;

    for (const auto& [c, f] : used_decomps) {
        const FormatDecomposition* d = fmts.find(c, f);
        if (!d) throw ParseError("decomposition " + c + "/" + f + " disappeared from database");
        spec.decompositions.push_back(*d);
    }
    res.spec = std::move(spec);
    return res;
}

Message apply_transformation(const TransformationSpec& spec, const Message& msg) {
    Message out;
    for (const TagTransformation& tt : spec.tags) {
        for (const std::string& src : tt.source_tags) {
            if (!msg.values.count(src)) {
                throw MissingTagError("message is missing source tag \"" + src + "\" for target \"" +
                                      tt.target_tag + "\"");
            }
        }
        std::string current;
        std::map<std::pair<std::string, std::string>, std::string> parsed; // (tag, part) -> value
        for (const TransformStep& step : tt.steps) {
            switch (step.kind) {
                case TransformStep::Kind::Copy:
                    current = msg.values.at(step.source_tag);
                    break;
                case TransformStep::Kind::Parse: {
                    const FormatDecomposition& d = spec.decomposition(step.decomp_concept, step.decomp_format);
                    for (const auto& [pc, pv] : parse_value(d, msg.values.at(step.source_tag))) {
                        parsed[{step.source_tag, pc}] = pv;
                    }
                    break;
                }
                case TransformStep::Kind::Assemble: {
                    const FormatDecomposition& d = spec.decomposition(step.decomp_concept, step.decomp_format);
                    std::map<std::string, std::string> parts;
                    for (const auto& ps : step.part_sources) {
                        if (ps.source_part.empty()) {
                            auto it = msg.values.find(ps.tag);
                            if (it == msg.values.end()) {
                                throw MissingTagError("message is missing tag \"" + ps.tag + "\"");
                            }
                            parts[ps.part] = it->second;
                        } else {
                            auto it = parsed.find({ps.tag, ps.source_part});
                            if (it == parsed.end()) {
                                throw MissingTagError("part " + ps.source_part + " of tag \"" + ps.tag +
                                                      "\" was never parsed");
                            }
                            parts[ps.part] = it->second;
                        }
                    }
                    current = assemble_value(d, parts);
                    break;
                }
                case TransformStep::Kind::Convert:
                    current = Expression::parse(step.expression).evaluate(current, spec.round_digits);
                    break;
                case TransformStep::Kind::Lookup: {
                    auto it = spec.tables.find(step.table);
                    if (it == spec.tables.end()) {
                        throw ParseError("transformation spec references unknown table \"" + step.table + "\"");
                    }
                    auto vit = it->second.find(current);
                    if (vit == it->second.end()) {
                        throw LookupMissError("lookup table \"" + step.table + "\" has no entry for \"" +
                                              current + "\"");
                    }
                    current = vit->second;
                    break;
                }
            }
        }
        out.values[tt.target_tag] = current;
    }
    return out;
}

} // namespace medc
