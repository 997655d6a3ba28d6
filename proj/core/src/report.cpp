#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <ostream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "vstab/error.hpp"
#include "vstab/experiment.hpp"

namespace vstab {

using nlohmann::json;

namespace {

std::string translation_cells(const std::optional<Translation>& t) {
    return t ? fmt::format("{},{}", t->dx, t->dy) : std::string(",");
}

}  // namespace

void write_comparison_csv(const BackendComparison& cmp, std::ostream& out) {
    out << "gain,repeat,step,functional_mode,msc_mode,functional_m_p.dx,functional_m_p.dy,msc_m_p.dx,msc_m_p.dy,"
           "functional_m_s.dx,functional_m_s.dy,msc_m_s.dx,msc_m_s.dy,canvas_equal,agree\n";
    for (const BackendStepComparison& s : cmp.steps) {
        out << fmt::format("{:g},{},{},{},{},{},{},{},{},{},{}\n", s.gain, s.repeat, s.step, to_string(s.functional.mode),
                           to_string(s.msc.mode), translation_cells(s.functional.m_p), translation_cells(s.msc.m_p),
                           translation_cells(s.functional.m_s), translation_cells(s.msc.m_s), s.canvas_equal ? 1 : 0,
                           s.agree() ? 1 : 0);
    }
    out << fmt::format("agreement_fraction,{:.9g}\n", cmp.agreement_fraction());
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw IoError("sha256 unavailable");
    }
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md.data(), &len);
    EVP_MD_CTX_free(ctx);
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
    return hex;
}

void write_manifest(const RunConfig& cfg, const std::vector<std::filesystem::path>& files) {
    json cells = json::array();
    for (int r = 0; r < cfg.repeats; ++r) {
        const CellSeeds s = cell_seeds(cfg.seed, r);
        cells.push_back({{"repeat", r}, {"trace_seed", s.trace_seed}, {"engine_seed", s.engine_seed}});
    }
    json outputs = json::object();
    for (const auto& f : files) outputs[f.generic_string()] = sha256_file(cfg.output_dir / f);
    const json manifest = {{"tool", "vstab"},
                           {"version", "0.1.0"},
                           {"config", to_json(cfg)},
                           {"master_seed", cfg.seed},
                           {"repeat_seeds", cells},
                           {"outputs", outputs}};
    std::ofstream out(cfg.output_dir / "manifest.json", std::ios::binary);
    if (!out) throw IoError("cannot write manifest in " + cfg.output_dir.string());
    out << manifest.dump(2) << "\n";
}

std::vector<std::string> verify_manifest(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw IoError("no manifest.json in " + dir.string());
    const json manifest = json::parse(in);
    std::vector<std::string> bad;
    for (const auto& [name, hash] : manifest.at("outputs").items()) {
        const auto p = dir / name;
        if (!std::filesystem::exists(p) || sha256_file(p) != hash.get<std::string>()) bad.push_back(name);
    }
    return bad;
}

void write_percept_csv(const PerceptTrace& trace, double dt, std::ostream& out) {
    out << "step,t,x,y,valid\n";
    for (std::size_t i = 0; i < trace.size(); ++i)
        out << fmt::format("{},{:.6f},{:.9g},{:.9g},{}\n", i, static_cast<double>(i) * dt, trace.positions[i].x,
                           trace.positions[i].y, trace.valid[i] ? 1 : 0);
}

void write_ratio_plot_svg(const SweepSummary& summary, std::ostream& out, const std::string& title) {
    constexpr double kPanelW = 360, kPanelH = 260, kMargin = 50, kGap = 40;
    const double width = 2 * kPanelW + kGap + 2 * kMargin;
    const double height = kPanelH + 2 * kMargin + 20;

    double gmin = 0, gmax = 1, ymax = 1.2;
    if (!summary.rows.empty()) {
        gmin = summary.rows.front().gain;
        gmax = summary.rows.back().gain;
        if (gmax == gmin) gmax = gmin + 1;
    }
    for (const GainSweepRow& r : summary.rows) {
        if (r.motion_ratio_world) ymax = std::max(ymax, *r.motion_ratio_world);
        if (r.motion_ratio_retinal) ymax = std::max(ymax, *r.motion_ratio_retinal);
    }
    ymax = std::ceil(ymax * 5.0) / 5.0;

    out << fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:g}\" height=\"{:g}\" "
                       "font-family=\"sans-serif\" font-size=\"11\">\n",
                       width, height);
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!title.empty()) out << fmt::format("<text x=\"{:g}\" y=\"18\" font-size=\"13\">{}</text>\n", kMargin, title);

    auto panel = [&](double x0, const char* label, auto ratio) {
        const double y0 = kMargin + 10;
        auto px = [&](double g) { return x0 + (g - gmin) / (gmax - gmin) * kPanelW; };
        auto py = [&](double v) { return y0 + kPanelH - v / ymax * kPanelH; };
        out << fmt::format("<rect x=\"{:g}\" y=\"{:g}\" width=\"{:g}\" height=\"{:g}\" fill=\"none\" stroke=\"black\"/>\n",
                           x0, y0, kPanelW, kPanelH);
        out << fmt::format("<text x=\"{:g}\" y=\"{:g}\">{}</text>\n", x0, y0 - 6, label);
        for (int k = 0; k <= 5; ++k) {
            const double v = ymax * k / 5.0;
            out << fmt::format("<text x=\"{:g}\" y=\"{:g}\" text-anchor=\"end\">{:.2f}</text>\n", x0 - 4, py(v) + 4, v);
        }
        for (const GainSweepRow& r : summary.rows)
            out << fmt::format("<text x=\"{:.2f}\" y=\"{:g}\" text-anchor=\"middle\">{:g}</text>\n", px(r.gain),
                               y0 + kPanelH + 14, r.gain);
        if (gmin < 1.0 && gmax > 1.0)
            out << fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:g}\" x2=\"{0:.2f}\" y2=\"{2:g}\" stroke=\"#bbb\" "
                               "stroke-dasharray=\"4 3\"/>\n",
                               px(1.0), y0, y0 + kPanelH);
        std::string pts;
        for (const GainSweepRow& r : summary.rows)
            if (auto v = ratio(r)) {
                pts += fmt::format("{:.2f},{:.2f} ", px(r.gain), py(std::min(*v, ymax)));
                out << fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"#1f5fa8\"/>\n", px(r.gain),
                                   py(std::min(*v, ymax)));
            }
        out << fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"#1f5fa8\"/>\n", pts);
        out << fmt::format("<text x=\"{:g}\" y=\"{:g}\" text-anchor=\"middle\">gain</text>\n", x0 + kPanelW / 2,
                           y0 + kPanelH + 30);
    };
    panel(kMargin, "perceived / world motion", [](const GainSweepRow& r) { return r.motion_ratio_world; });
    panel(kMargin + kPanelW + kGap, "perceived / retinal motion",
          [](const GainSweepRow& r) { return r.motion_ratio_retinal; });
    out << "</svg>\n";
}

}  // namespace vstab
