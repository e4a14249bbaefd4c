#include "medc/cli.hpp"
#include "medc/errors.hpp"
#include "medc/jsonio.hpp"
#include "medc/matchmaker.hpp"
#include "medc/pattern_db.hpp"
#include "medc/procmodel.hpp"
#include "medc/registry.hpp"
#include "medc/simulate.hpp"
#include "medc/transform.hpp"
#include "medc/util.hpp"
#include "medc/workflow.hpp"
#include "medc/xslt.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>

namespace medc {

namespace {

namespace fs = std::filesystem;

struct Paths {
    std::string process, registry, ontology, formats, units, tables;
    std::string patterns, config, out_dir, report, mocks, message, spec, prompt_file;
    bool canonical = false;
};

long elapsed_ms(std::chrono::steady_clock::time_point& mark) {
    auto now = std::chrono::steady_clock::now();
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now - mark).count();
    mark = now;
    return static_cast<long>(ms);
}

std::string sanitize(const std::string& s) {
    std::string out;
    for (char c : s) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                  c == '.' || c == '_' || c == '-';
        out += ok ? c : '_';
    }
    return out;
}

struct Inputs {
    Ontology ontology;
    Registry registry;
    ProcessModel process;
    FormatDatabase formats;
    UnitDatabase units;
    LookupTables tables;
    MatchConfig match_cfg;
    ReconConfig recon_cfg;
};

Inputs load_inputs(const Paths& a, bool with_databases) {
    Inputs in;
    in.ontology = Ontology::load_file(a.ontology);
    in.registry = Registry::load_file(a.registry);
    in.process = ProcessModel::load_file(a.process);
    if (with_databases) {
        if (!a.formats.empty()) in.formats = FormatDatabase::load_file(a.formats);
        if (!a.units.empty()) in.units = UnitDatabase::load_file(a.units);
        if (!a.tables.empty()) in.tables = LookupTables::load_file(a.tables);
    }
    json cfg = a.config.empty() ? json::object() : load_json_file(a.config);
    in.match_cfg = MatchConfig::from_json(cfg);
    in.recon_cfg.metric = in.match_cfg.metric;
    in.recon_cfg.sigma = in.match_cfg.sigma;
    in.recon_cfg.degrees = in.match_cfg.degrees;
    if (cfg.contains("round_digits")) {
        if (!cfg.at("round_digits").is_number_integer()) {
            throw ConfigError("config: \"round_digits\" must be an integer");
        }
        in.recon_cfg.round_digits = cfg.at("round_digits").get<int>();
        if (in.recon_cfg.round_digits < 0 || in.recon_cfg.round_digits > 12) {
            throw ConfigError("config: \"round_digits\" must lie in [0,12]");
        }
    }
    return in;
}

std::map<std::string, FilterCriteria> activity_criteria(const ProcessModel& p) {
    std::map<std::string, FilterCriteria> criteria;
    for (const auto& id : p.activity_order()) {
        criteria[id] = criteria_for(p.node(id).annotation);
    }
    return criteria;
}

int cmd_compile(const Paths& a) {
    auto mark = std::chrono::steady_clock::now();
    Inputs in = load_inputs(a, true);
    std::string patterns_path = a.patterns.empty() ? a.out_dir + "/patterns.json" : a.patterns;
    PatternDatabase db = PatternDatabase::load_file(patterns_path);
    long load_ms = elapsed_ms(mark);

    MatchPlan plan = match_process(in.process, in.registry, in.ontology, db, in.match_cfg,
                                   activity_criteria(in.process));
    long match_ms = elapsed_ms(mark);

    std::vector<std::map<OpRef, std::string>> spec_refs(plan.assignments.size());
    std::vector<std::set<OpRef>> no_spec(plan.assignments.size());
    std::map<std::string, std::string> artifacts; // file name -> content
    json unbound_report = json::array();
    std::set<std::string> used_names;
    for (size_t ai = 0; ai < plan.assignments.size(); ++ai) {
        const Assignment& asg = plan.assignments[ai];
        auto [req, prod] = external_io(in.process, asg.group);
        (void)prod;
        std::vector<TagSpec> avail = req;
        for (const OpRef& ref : asg.composition) {
            const OperationDescriptor& op = in.registry.operation(ref);
            if (op.inputs.empty()) {
                no_spec[ai].insert(ref);
            } else {
                GenResult gr = generate_transformation_spec(ref, op.inputs, avail, in.ontology,
                                                            in.formats, in.units, in.tables,
                                                            in.recon_cfg);
                if (gr.spec) {
                    std::string base = "transform-" + sanitize(ref.service_id) + "-" +
                                       sanitize(ref.operation_id);
                    std::string name = base + ".json";
                    for (int n = 2; used_names.count(name); ++n) {
                        name = base + "-" + std::to_string(n) + ".json";
                    }
                    used_names.insert(name);
                    spec_refs[ai][ref] = name;
                    artifacts[name] = gr.spec->to_json().dump(2) + "\n";
                    try {
                        artifacts[base + ".xsl"] = render_xslt(*gr.spec);
                    } catch (const UnsupportedPatternError&) {
                        // spec stays executable natively; no stylesheet emitted
                    }
                } else {
                    no_spec[ai].insert(ref);
                    unbound_report.push_back({{"service", ref.service_id},
                                              {"operation", ref.operation_id},
                                              {"tags", gr.unbound}});
                }
            }
            for (const TagSpec& t : op.outputs) avail.push_back(t);
        }
    }

    Workflow w = generate_workflow(in.process, plan, spec_refs, no_spec,
                                   fs::path(a.process).stem().string());
    artifacts["workflow.xml"] = serialize_workflow(w);
    long generate_ms = elapsed_ms(mark);

    fs::create_directories(a.out_dir);
    for (const auto& [name, content] : artifacts) {
        write_file(a.out_dir + "/" + name, content);
    }
    db.save_file(patterns_path, a.canonical);
    long write_ms = elapsed_ms(mark);

    json timings = {{"load", a.canonical ? 0 : load_ms},
                    {"match", a.canonical ? 0 : match_ms},
                    {"generate", a.canonical ? 0 : generate_ms},
                    {"write", a.canonical ? 0 : write_ms}};
    json report = {{"plan", plan.to_json()}, {"unbound", unbound_report}, {"timings_ms", timings}};
    std::string report_path = a.report.empty() ? a.out_dir + "/report.json" : a.report;
    write_file(report_path, report.dump(2) + "\n");

    bool partial = !plan.uncovered.empty() || !unbound_report.empty();
    if (partial) {
        for (const auto& id : plan.uncovered) {
            std::cout << "uncovered: " << id << " (stubbed)\n";
        }
        for (const auto& u : unbound_report) {
            std::cout << "unbound: " << u.at("service").get<std::string>() << "/"
                      << u.at("operation").get<std::string>() << "\n";
        }
    }
    std::cout << "workflow: " << a.out_dir << "/workflow.xml\n";
    std::cout << "report: " << report_path << "\n";
    return partial ? 2 : 0;
}

std::string fmt4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

int cmd_match(const Paths& a) {
    Inputs in = load_inputs(a, false);
    std::map<std::string, FilterCriteria> criteria = activity_criteria(in.process);
    const MatchConfig& cfg = in.match_cfg;

    std::vector<ActivityGroup> groups = enumerate_groups(in.process, cfg.k);
    for (const ActivityGroup& g : groups) {
        std::cout << (g.shape == GroupShape::Run ? "run" : "block") << " [";
        for (size_t i = 0; i < g.activity_ids.size(); ++i) {
            if (i) std::cout << " ";
            std::cout << g.activity_ids[i];
        }
        std::cout << "]\n";

        std::vector<OpRef> pool;
        bool first = true;
        for (const auto& id : g.activity_ids) {
            std::vector<OpRef> mine = prefilter(in.registry, criteria[id]);
            if (first) {
                pool = std::move(mine);
                first = false;
            } else {
                std::vector<OpRef> keep;
                std::set_intersection(pool.begin(), pool.end(), mine.begin(), mine.end(),
                                      std::back_inserter(keep));
                pool = std::move(keep);
            }
        }
        std::vector<Candidate> cands;
        std::vector<OpRef> cur;
        std::function<void()> extend = [&]() {
            if (!cur.empty()) cands.push_back({0, cur});
            if (cur.size() == static_cast<size_t>(cfg.m)) return;
            for (const OpRef& op : pool) {
                if (std::find(cur.begin(), cur.end(), op) != cur.end()) continue;
                cur.push_back(op);
                extend();
                cur.pop_back();
            }
        };
        extend();
        std::vector<ActivityGroup> one{g};
        std::vector<std::optional<MatchScore>> scores =
            score_candidates_serial(one, cands, in.registry, in.ontology, cfg, in.process);

        struct Row {
            const Candidate* cand;
            MatchScore score;
            std::string sig;
        };
        std::vector<Row> rows;
        for (size_t i = 0; i < cands.size(); ++i) {
            if (!scores[i]) continue;
            const MatchScore& s = *scores[i];
            bool ok = s.combined >= cfg.tau - 1e-9 ||
                      (s.logic <= 1e-9 && s.syntactic >= cfg.sigma - 1e-9);
            if (!ok) continue;
            std::string sig;
            for (const auto& ref : cands[i].composition) sig += ref.service_id + "/" + ref.operation_id + ",";
            rows.push_back({&cands[i], s, sig});
        }
        std::sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) {
            if (x.score.combined != y.score.combined) return x.score.combined > y.score.combined;
            if (x.cand->composition.size() != y.cand->composition.size()) {
                return x.cand->composition.size() < y.cand->composition.size();
            }
            return x.sig < y.sig;
        });
        if (rows.empty()) std::cout << "  (no candidate reaches the thresholds)\n";
        for (size_t i = 0; i < rows.size(); ++i) {
            std::cout << "  " << (i + 1) << ". ";
            for (size_t j = 0; j < rows[i].cand->composition.size(); ++j) {
                if (j) std::cout << " + ";
                std::cout << rows[i].cand->composition[j].service_id << "/"
                          << rows[i].cand->composition[j].operation_id;
            }
            const MatchScore& s = rows[i].score;
            std::cout << "  combined=" << fmt4(s.combined) << " logic=" << fmt4(s.logic)
                      << " io=" << fmt4(s.io_integrity) << " syntactic=" << fmt4(s.syntactic) << "\n";
        }
    }

    PatternDatabase db; // throwaway: the explain view never persists patterns
    MatchPlan plan = match_process(in.process, in.registry, in.ontology, db, cfg, criteria);
    std::cout << "plan:\n";
    for (const auto& asg : plan.assignments) {
        std::cout << "  [";
        for (size_t i = 0; i < asg.group.activity_ids.size(); ++i) {
            if (i) std::cout << " ";
            std::cout << asg.group.activity_ids[i];
        }
        std::cout << "] -> ";
        for (size_t j = 0; j < asg.composition.size(); ++j) {
            if (j) std::cout << " + ";
            std::cout << asg.composition[j].service_id << "/" << asg.composition[j].operation_id;
        }
        std::cout << "  combined=" << fmt4(asg.score.combined) << " (" << asg.provenance << ")\n";
    }
    for (const auto& id : plan.uncovered) std::cout << "  uncovered: " << id << "\n";
    return plan.uncovered.empty() ? 0 : 2;
}

int cmd_transform(const Paths& a) {
    TransformationSpec spec = TransformationSpec::load_file(a.spec);
    Message msg = Message::load_file(a.message);
    Message out = apply_transformation(spec, msg);
    std::cout << out.dump();
    return 0;
}

void collect_spec_refs(const WfNode& n, std::set<std::string>& refs) {
    if (n.kind == WfKind::Transform) refs.insert(n.spec);
    if (n.kind == WfKind::Invoke && !n.transform.empty()) refs.insert(n.transform);
    for (const auto& c : n.children) collect_spec_refs(c, refs);
}

int cmd_simulate(const Paths& a) {
    Workflow w = parse_workflow(read_file(a.out_dir + "/workflow.xml"));
    std::set<std::string> refs;
    collect_spec_refs(w.root, refs);
    std::map<std::string, TransformationSpec> specs;
    for (const auto& ref : refs) {
        specs.emplace(ref, TransformationSpec::load_file(a.out_dir + "/" + ref));
    }
    MockSet mocks = MockSet::load_file(a.mocks);
    Message initial = Message::load_file(a.message);
    std::optional<Message> prompt;
    if (!a.prompt_file.empty()) prompt = Message::load_file(a.prompt_file);
    Message final_msg = simulate_workflow(w, specs, mocks, initial, prompt);
    std::cout << final_msg.dump();
    return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"medc - compiles annotated business processes onto concrete service workflows"};
    app.require_subcommand(1);
    Paths a;

    CLI::App* compile = app.add_subcommand("compile", "match, generate transformations, emit the workflow");
    compile->add_option("--process", a.process)->required();
    compile->add_option("--registry", a.registry)->required();
    compile->add_option("--ontology", a.ontology)->required();
    compile->add_option("--formats", a.formats);
    compile->add_option("--units", a.units);
    compile->add_option("--tables", a.tables);
    compile->add_option("--patterns", a.patterns);
    compile->add_option("--config", a.config);
    compile->add_option("--out-dir", a.out_dir)->required();
    compile->add_option("--report", a.report);
    compile->add_flag("--canonical", a.canonical, "pin timings and pattern-db metadata for byte comparison");

    CLI::App* match = app.add_subcommand("match", "print ranked candidate compositions per group");
    match->add_option("--process", a.process)->required();
    match->add_option("--registry", a.registry)->required();
    match->add_option("--ontology", a.ontology)->required();
    match->add_option("--config", a.config);

    CLI::App* transform = app.add_subcommand("transform", "apply one transformation spec to a message");
    transform->add_option("--spec", a.spec)->required();
    transform->add_option("--message", a.message)->required();

    CLI::App* simulate = app.add_subcommand("simulate", "execute a compiled workflow against mocks");
    simulate->add_option("--out-dir", a.out_dir)->required();
    simulate->add_option("--mocks", a.mocks)->required();
    simulate->add_option("--message", a.message)->required();
    simulate->add_option("--prompt-file", a.prompt_file);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (compile->parsed()) return cmd_compile(a);
        if (match->parsed()) return cmd_match(a);
        if (transform->parsed()) return cmd_transform(a);
        return cmd_simulate(a);
    } catch (const PromptRequiredError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<std::string> full;
    full.push_back("medc");
    full.insert(full.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& s : full) argv.push_back(s.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

} // namespace medc
