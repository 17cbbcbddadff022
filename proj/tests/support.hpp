#pragma once

#include <cstddef>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>

#include <backcast/textio.hpp>

// Builders shared by the suites: a workflow in the parallel-section
// language following the setup / bulk / collector layout the checkpoint
// mapping expects, and a small cloud description to run it on.
namespace testsupport {

// Bulk compute amounts vary per (section, vm, slot) so plans have a real
// completion order to exercise.
inline double bulk_amount(std::size_t section, std::size_t vm, std::size_t slot) {
    return 150.0 + static_cast<double>((section * 31 + vm * 17 + slot * 53) % 120);
}

// One setup VM, `bulk_sections` sections of `vms_per_section` VMs with two
// tracked compute steps each, one collector VM. Shape comes out as
// (bulk_sections, 2 * vms_per_section).
inline std::string demo_workflow(std::size_t bulk_sections, std::size_t vms_per_section,
                                 double compute_scale = 1.0) {
    using backcast::format_double;
    std::string text;
    text += "# demo workflow, generated\n";
    text += "PSSTART\n";
    text += "VMDEF VA=img,5,1,1000000000 RC=2,1,1073741824 VAST=store DATA=store\n";
    text += "VMSEQ N40000000 C" + format_double(60.0 * compute_scale) + "!setup N10000000\n";
    for (std::size_t s = 1; s <= bulk_sections; ++s) {
        text += "PSSTART\n";
        text += "VMDEF VA=img,5,1,1000000000 RC=2,1,1073741824 VAST=store DATA=store\n";
        for (std::size_t v = 1; v <= vms_per_section; ++v) {
            text += "VMSEQ N50000000";
            for (std::size_t a = 0; a < 2; ++a) {
                text += " C" + format_double(bulk_amount(s, v, a) * compute_scale) + "!b" +
                        std::to_string(s) + "v" + std::to_string(v) + (a == 0 ? "a" : "b");
            }
            text += " N25000000\n";
        }
    }
    text += "PSSTART\n";
    text += "VMDEF VA=img,5,1,1000000000 RC=2,1,1073741824 VAST=store DATA=store\n";
    text += "VMSEQ N30000000 C" + format_double(45.0 * compute_scale) + "!collect N5000000\n";
    return text;
}

inline std::string small_cloud(int pm_count = 2, int cores = 8) {
    return "PM count=" + std::to_string(pm_count) + " cores=" + std::to_string(cores) +
           " perf=1 mem=34359738368\n"
           "REPO name=store bandwidth=125000000 latency=0.001\n";
}

// Scratch directory removed on scope exit.
class TempDir {
public:
    TempDir() {
        const auto base = std::filesystem::temp_directory_path();
        std::random_device rd;
        for (int attempt = 0; attempt < 64; ++attempt) {
            auto candidate = base / ("backcast-test-" + std::to_string(rd()));
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path_ = candidate;
                return;
            }
        }
        throw std::runtime_error("could not create a scratch directory");
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }

    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

} // namespace testsupport
