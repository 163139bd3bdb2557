#include "blink/report.hpp"
#include "blink/scenario.hpp"
#include "blink/simkit.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kValidation = 1, kRuntime = 2, kNotConverged = 3 };

struct Source {
    std::string preset;
    std::string scenario;
};

void print_errors(const std::vector<std::string>& errors) {
    for (const auto& e : errors) {
        std::cerr << "error: " << e << "\n";
    }
}

std::optional<blink::ScenarioConfig> load(const Source& src, int& status) {
    if (src.preset.empty() == src.scenario.empty()) {
        std::cerr << "error: give exactly one of --preset or --scenario\n";
        status = kValidation;
        return std::nullopt;
    }
    if (!src.preset.empty()) {
        try {
            return blink::preset(src.preset);
        } catch (const std::invalid_argument& e) {
            std::cerr << "error: " << e.what() << "\n";
            status = kValidation;
            return std::nullopt;
        }
    }
    if (!fs::exists(src.scenario)) {
        std::cerr << "error: " << src.scenario << ": no such file\n";
        status = kValidation;
        return std::nullopt;
    }
    auto v = blink::validate_scenario(src.scenario);
    if (!v.config) {
        print_errors(v.errors);
        status = kValidation;
        return std::nullopt;
    }
    return v.config;
}

// Writes every artifact to a temporary name first and renames only when all writes
// succeeded, so a failed run leaves nothing behind.
bool write_artifacts(const fs::path& dir, const std::vector<std::pair<std::string, std::string>>& files) {
    std::vector<std::pair<fs::path, fs::path>> staged;
    auto cleanup = [&] {
        std::error_code ec;
        for (const auto& [tmp, final_path] : staged) {
            fs::remove(tmp, ec);
        }
    };
    for (const auto& [name, content] : files) {
        const fs::path final_path = dir / name;
        const fs::path tmp = dir / ("." + name + ".tmp");
        staged.emplace_back(tmp, final_path);
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << content;
        out.close();
        if (!out) {
            std::cerr << "error: cannot write " << final_path.string() << "\n";
            cleanup();
            return false;
        }
    }
    for (const auto& [tmp, final_path] : staged) {
        std::error_code ec;
        fs::rename(tmp, final_path, ec);
        if (ec) {
            std::cerr << "error: cannot write " << final_path.string() << ": " << ec.message() << "\n";
            cleanup();
            return false;
        }
    }
    return true;
}

bool probe_writable(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        std::cerr << "error: output directory " << dir.string() << " is not usable\n";
        return false;
    }
    const fs::path probe = dir / ".blinksim-probe";
    {
        std::ofstream out(probe);
        out << "";
        if (!out) {
            std::cerr << "error: output directory " << dir.string() << " is not writable\n";
            return false;
        }
    }
    fs::remove(probe, ec);
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Blink consensus timing synchronization simulator"};
    app.require_subcommand(1);

    Source run_src;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> cycles;
    std::string out_dir = "out";
    std::vector<std::string> emit;
    bool noiseless = false;
    bool fine = false;
    bool require_convergence = false;

    auto* run = app.add_subcommand("run", "run a scenario and write reports");
    auto* p = run->add_option("--preset", run_src.preset, "built-in scenario");
    auto* s = run->add_option("--scenario", run_src.scenario, "scenario JSON file");
    p->excludes(s);
    run->add_option("--seed", seed, "override the scenario seed");
    run->add_option("--cycles", cycles, "number of measured blink cycles (after warm-up)");
    run->add_option("--out", out_dir, "output directory")->capture_default_str();
    run->add_option("--emit", emit, "artifacts to write: summary, csv, trace")
        ->check(CLI::IsMember({"summary", "csv", "trace"}))
        ->delimiter(',');
    run->add_flag("--noiseless", noiseless, "zero channel and oscillator noise");
    run->add_flag("--fine-correction", fine, "enable the 200 ps transmit shift");
    run->add_flag("--require-convergence", require_convergence, "exit 3 when the network never converges");

    Source val_src;
    auto* validate = app.add_subcommand("validate", "check a scenario file or preset");
    auto* vp = validate->add_option("--preset", val_src.preset, "built-in scenario");
    auto* vs = validate->add_option("--scenario", val_src.scenario, "scenario JSON file");
    vp->excludes(vs);

    std::string preset_name;
    auto* show = app.add_subcommand("preset", "list presets, or print one as a scenario file");
    show->add_option("name", preset_name, "preset name");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kValidation;
    }

    if (*show) {
        if (preset_name.empty()) {
            for (const auto& n : blink::preset_names()) {
                std::cout << n << "\n";
            }
            return kOk;
        }
        try {
            std::cout << blink::scenario_to_json(blink::preset(preset_name)).dump(2) << "\n";
        } catch (const std::invalid_argument& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kValidation;
        }
        return kOk;
    }

    if (*validate) {
        int status = kOk;
        auto cfg = load(val_src, status);
        if (!cfg) {
            return status;
        }
        const auto errors = blink::validate(*cfg);
        if (!errors.empty()) {
            print_errors(errors);
            return kValidation;
        }
        std::cout << "ok: " << cfg->name << " (" << cfg->nodes.size() << " nodes, " << cfg->links.size()
                  << " links)\n";
        return kOk;
    }

    int status = kOk;
    auto cfg = load(run_src, status);
    if (!cfg) {
        return status;
    }
    if (seed) {
        cfg->seed = *seed;
    }
    if (cycles) {
        cfg->measurements = *cycles;
    }
    cfg->noiseless = cfg->noiseless || noiseless;
    cfg->fine_correction = cfg->fine_correction || fine;
    if (emit.empty()) {
        emit = {"summary"};
    }
    auto wants = [&](const char* what) { return std::find(emit.begin(), emit.end(), what) != emit.end(); };
    cfg->keep_trace = wants("trace");

    const auto errors = blink::validate(*cfg);
    if (!errors.empty()) {
        print_errors(errors);
        return kValidation;
    }
    if (!probe_writable(out_dir)) {
        return kRuntime;
    }

    blink::ScenarioResult result;
    try {
        result = blink::run_scenario(*cfg);
    } catch (const blink::ScenarioError& e) {
        print_errors(e.problems());
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }

    std::vector<std::pair<std::string, std::string>> files;
    const std::string table = blink::summary_table(result);
    if (wants("summary")) {
        files.emplace_back("summary.json", blink::summary_json(result).dump(2) + "\n");
        files.emplace_back("summary.txt", table);
    }
    if (wants("csv")) {
        files.emplace_back("offsets.csv", blink::offsets_csv(result));
    }
    if (wants("trace")) {
        files.emplace_back("trace.jsonl", blink::trace_jsonl(result));
    }
    if (!write_artifacts(out_dir, files)) {
        return kRuntime;
    }
    std::cout << table;

    if (require_convergence && !result.convergence_time_ps) {
        std::cerr << "error: network did not converge within " << cfg->sigma_tol_ps << " ps\n";
        return kNotConverged;
    }
    return kOk;
}
