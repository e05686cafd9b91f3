#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "hann/compression.hpp"
#include "hann/datasets.hpp"
#include "hann/experiments.hpp"
#include "hann/geometry.hpp"
#include "hann/hac.hpp"
#include "hann/qnet.hpp"
#include "json.hpp"

namespace hann::io {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Arrangements and classifiers
// ---------------------------------------------------------------------------

/// {"d":..., "k":..., "normals": column-major array, "offsets": [...]}
inline json to_json(const geometry::Arrangement& arr) {
    json j;
    j["d"] = arr.d();
    j["k"] = arr.k();
    std::vector<double> col_major;
    col_major.reserve(static_cast<std::size_t>(arr.d()) * static_cast<std::size_t>(arr.k()));
    for (int c = 0; c < arr.k(); ++c)
        for (int r = 0; r < arr.d(); ++r)
            col_major.push_back(arr.normals(static_cast<std::size_t>(r), static_cast<std::size_t>(c)));
    j["normals"] = col_major;
    j["offsets"] = arr.offsets;
    return j;
}

inline geometry::Arrangement arrangement_from_json(const json& j) {
    geometry::Arrangement arr;
    int d = j.at("d").get<int>();
    int k = j.at("k").get<int>();
    if (d < 1 || k < 0) throw Error("arrangement json: bad dimensions");
    std::vector<double> col_major = j.at("normals").get<std::vector<double>>();
    if (col_major.size() != static_cast<std::size_t>(d) * static_cast<std::size_t>(k))
        throw Error("arrangement json: normals size mismatch");
    arr.normals = Matrix(static_cast<std::size_t>(d), static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c)
        for (int r = 0; r < d; ++r)
            arr.normals(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) =
                col_major[static_cast<std::size_t>(c) * static_cast<std::size_t>(d) +
                          static_cast<std::size_t>(r)];
    arr.offsets = j.at("offsets").get<std::vector<double>>();
    if (arr.offsets.size() != static_cast<std::size_t>(k))
        throw Error("arrangement json: offsets size mismatch");
    arr.validate();
    return arr;
}

/// {arrangement, table: [{"pattern":"+-+","label":+-1}], default_label, rank_budget}
inline json to_json(const hac::HacClassifier& clf) {
    json j;
    j["arrangement"] = to_json(clf.arrangement);
    json table = json::array();
    for (const auto& [pattern, label] : clf.table.entries)
        table.push_back({{"pattern", pattern.str()}, {"label", label}});
    j["table"] = table;
    j["default_label"] = clf.table.default_label;
    j["rank_budget"] = clf.rank_budget;
    return j;
}

inline hac::HacClassifier classifier_from_json(const json& j) {
    hac::HacClassifier clf;
    clf.arrangement = arrangement_from_json(j.at("arrangement"));
    clf.rank_budget = j.at("rank_budget").get<int>();
    clf.table.default_label = j.value("default_label", +1);
    for (const auto& row : j.at("table")) {
        geometry::SignVector sv =
            geometry::SignVector::from_string(row.at("pattern").get<std::string>());
        int label = row.at("label").get<int>();
        if (label != 1 && label != -1) throw Error("classifier json: labels must be +-1");
        if (static_cast<int>(sv.size()) != clf.arrangement.k())
            throw Error("classifier json: pattern length mismatch");
        clf.table.entries[sv] = label;
    }
    return clf;
}

// ---------------------------------------------------------------------------
// Compression artifacts
// ---------------------------------------------------------------------------

inline json sample_to_json(const hac::LabeledSample& s) {
    return {{"x", s.x}, {"y", s.y}};
}

/// Human-readable debug form of a compressed sample (the canonical form is
/// the binary layout in hann/compression.hpp).
inline json to_json_debug(const compression::CompressedSample& comp) {
    json j;
    j["d"] = comp.d;
    j["r"] = comp.r;
    j["k"] = comp.k;
    json qp = json::array();
    for (std::size_t i = 0; i < comp.qp_samples.size(); ++i) {
        json row = sample_to_json(comp.qp_samples[i]);
        row["sign_bit"] = comp.side_info.entries[i].sign_bit;
        row["hyperplane_index"] = comp.side_info.entries[i].hyperplane_index;
        qp.push_back(row);
    }
    j["qp_samples"] = qp;
    json table = json::array();
    for (const auto& s : comp.table_samples) table.push_back(sample_to_json(s));
    j["table_samples"] = table;
    j["side_info_bits"] = comp.side_info.bit_cost();
    return j;
}

inline json to_json(const compression::RoundTripReport& rep) {
    json j;
    j["consistent"] = rep.consistent;
    j["violations"] = rep.violations;
    j["failure"] = rep.failure;
    j["n"] = rep.n;
    j["d"] = rep.d;
    j["r"] = rep.r;
    j["k"] = rep.k;
    j["qp_count"] = rep.qp_count;
    j["qp_sample_budget"] = rep.qp_budget;
    j["qp_sample_budget_alt"] = rep.qp_budget_alt;
    j["side_bits"] = rep.side_bits;
    j["side_bits_budget"] = rep.side_bits_budget;
    j["table_count"] = rep.table_count;
    j["table_budget"] = rep.table_budget;
    j["budgets_ok"] = rep.budgets_ok;
    j["membership_ok"] = rep.membership_ok;
    j["min_margin_canonical"] = rep.min_margin_canonical;
    return j;
}

// ---------------------------------------------------------------------------
// Experiment reports
// ---------------------------------------------------------------------------

inline json to_json(const experiments::RateReport& rep) {
    json j;
    j["d"] = rep.d;
    j["lipschitz_l"] = rep.lipschitz_l;
    j["trials"] = rep.trials;
    j["mc_n"] = rep.mc_n;
    j["seed"] = rep.seed;
    j["k_tilde_rule"] = rep.k_tilde_rule;
    j["target_slope"] = rep.target_slope;
    j["slope"] = rep.slope;
    j["intercept"] = rep.intercept;
    j["degenerate_fit"] = rep.degenerate_fit;
    j["monotone_within_2se"] = rep.monotone_within_2se;
    j["in_class_certified"] = rep.in_class_certified;
    json pts = json::array();
    for (const auto& p : rep.points)
        pts.push_back({{"n", p.n},
                       {"k_tilde", p.k_tilde},
                       {"arrangement_k", p.arrangement_k},
                       {"mean_excess", p.mean_excess},
                       {"std_error", p.std_error}});
    j["points"] = pts;
    return j;
}

inline json to_json(const experiments::CellComplexityReport& rep, bool include_grid = false) {
    json j;
    j["resolution"] = rep.resolution;
    j["bbox"] = {rep.x_min, rep.x_max, rep.y_min, rep.y_max};
    json cells = json::array();
    for (const auto& c : rep.cells)
        cells.push_back({{"pattern", c.pattern},
                         {"grid_count", c.grid_count},
                         {"train_count", c.train_count},
                         {"predicted_label", c.predicted_label},
                         {"boundary_adjacent", c.boundary_adjacent},
                         {"highlighted", c.highlighted}});
    j["cells"] = cells;
    if (include_grid) {
        j["grid_cell"] = rep.grid_cell;
        j["grid_labels"] = rep.grid_labels;
    }
    return j;
}

inline json to_json(const experiments::MoonsReport& rep, bool include_grid = false) {
    json j;
    j["config"] = {{"n_train", rep.config.n_train},
                   {"n_val", rep.config.n_val},
                   {"noise_sigma", rep.config.noise_sigma},
                   {"k", rep.config.k},
                   {"epochs", rep.config.epochs},
                   {"learning_rate", rep.config.learning_rate},
                   {"batch_size", rep.config.batch_size},
                   {"dropout_rate", rep.config.dropout_rate},
                   {"sm_param", rep.config.sm_param},
                   {"eval_every", rep.config.eval_every},
                   {"runs_per_heuristic", rep.config.runs_per_heuristic},
                   {"grid_resolution", rep.config.grid_resolution},
                   {"seed", rep.config.seed}};
    json runs = json::array();
    for (const auto& r : rep.runs)
        runs.push_back({{"quantizer", r.quantizer},
                        {"run_seed", r.run_seed},
                        {"val_acc", r.val_acc},
                        {"train_acc", r.train_acc},
                        {"best_epoch", r.best_epoch}});
    j["runs"] = runs;
    j["median_ste"] = rep.median_ste;
    j["median_swish"] = rep.median_swish;
    j["best_run_index"] = rep.best_run_index;
    j["cells"] = to_json(rep.cells, include_grid);
    j["arrangement"] = to_json(rep.best_arrangement);
    return j;
}

inline json to_json(const experiments::BenchmarkReport& rep) {
    json j;
    j["config"] = {{"k", rep.config.k},
                   {"dropout_grid", rep.config.dropout_grid},
                   {"learning_rate", rep.config.learning_rate},
                   {"batch_size", rep.config.batch_size},
                   {"epochs", rep.config.epochs},
                   {"sm_param", rep.config.sm_param},
                   {"eval_every", rep.config.eval_every},
                   {"seed", rep.config.seed},
                   {"pca_gate", rep.config.pca_gate}};
    json results = json::array();
    for (const auto& r : rep.results) {
        json g = json::array();
        for (const auto& point : r.grid) {
            json hist = json::array();
            for (const auto& row : point.history)
                hist.push_back({{"epoch", row.epoch},
                                {"train_acc", row.train_acc},
                                {"val_acc_window", row.val_acc_window},
                                {"val_acc_smoothed", row.val_acc_smoothed}});
            g.push_back({{"dropout", point.dropout},
                         {"best_smoothed", point.best_smoothed},
                         {"best_epoch", point.best_epoch},
                         {"test_acc", point.test_acc},
                         {"history", hist}});
        }
        results.push_back({{"name", r.name},
                           {"ok", r.ok},
                           {"error", r.error},
                           {"pca_applied", r.pca_applied},
                           {"feature_dim", r.feature_dim},
                           {"selected_index", r.selected_index},
                           {"selected_smoothed", r.selected_smoothed},
                           {"test_accuracy", r.test_accuracy},
                           {"grid", g}});
    }
    j["results"] = results;
    return j;
}

/// {n, d, class_count, source, preprocessing: [...]}
inline json dataset_metadata(const data::Dataset& ds,
                             const std::vector<std::string>& preprocessing) {
    return {{"n", ds.n()},
            {"d", ds.d()},
            {"class_count", ds.class_count},
            {"source", ds.source},
            {"preprocessing", preprocessing}};
}

// ---------------------------------------------------------------------------
// Network checkpoints: topology JSON + raw little-endian f64 parameter blob
// with a manifest of per-layer offsets.
// ---------------------------------------------------------------------------

namespace detail {

inline void append_layer(json& layers, std::vector<double>& blob, const std::string& name,
                         const qnet::DenseLayer& layer) {
    json entry;
    entry["name"] = name;
    entry["rows"] = layer.w.rows;
    entry["cols"] = layer.w.cols;
    entry["w_offset"] = blob.size();
    blob.insert(blob.end(), layer.w.data.begin(), layer.w.data.end());
    entry["b_offset"] = blob.size();
    blob.insert(blob.end(), layer.b.begin(), layer.b.end());
    layers.push_back(entry);
}

inline void read_layer(const json& entry, const std::vector<double>& blob,
                       qnet::DenseLayer& layer) {
    std::size_t rows = entry.at("rows").get<std::size_t>();
    std::size_t cols = entry.at("cols").get<std::size_t>();
    std::size_t w_off = entry.at("w_offset").get<std::size_t>();
    std::size_t b_off = entry.at("b_offset").get<std::size_t>();
    if (b_off + cols > blob.size() || w_off + rows * cols > blob.size())
        throw Error("checkpoint: blob too small for manifest");
    layer.w = Matrix(rows, cols);
    std::copy(blob.begin() + static_cast<std::ptrdiff_t>(w_off),
              blob.begin() + static_cast<std::ptrdiff_t>(w_off + rows * cols),
              layer.w.data.begin());
    layer.b.assign(blob.begin() + static_cast<std::ptrdiff_t>(b_off),
                   blob.begin() + static_cast<std::ptrdiff_t>(b_off + cols));
}

}  // namespace detail

inline void save_checkpoint(const qnet::HannNetwork& net, const std::string& path_prefix) {
    json topo;
    topo["input_dim"] = net.input_dim;
    topo["latent_dim"] = net.latent_dim;
    topo["k"] = net.k;
    topo["num_classes"] = net.num_classes;
    topo["out_dim"] = net.out_dim;
    topo["has_latent"] = net.has_latent;
    topo["head"] = net.head_kind == qnet::HeadKind::Mlp2k ? "mlp2k" : "resnet1000";
    topo["quantizer"] = {{"kind", net.quantizer.name()},
                         {"clip", net.quantizer.clip},
                         {"beta", net.quantizer.beta}};

    std::vector<double> blob;
    json layers = json::array();
    if (net.has_latent) detail::append_layer(layers, blob, "latent", net.latent);
    detail::append_layer(layers, blob, "hyper", net.hyper);
    detail::append_layer(layers, blob, "head1", net.head1);
    detail::append_layer(layers, blob, "head2", net.head2);
    if (net.head_kind == qnet::HeadKind::Resnet1000)
        detail::append_layer(layers, blob, "skip", net.skip);
    topo["layers"] = layers;
    topo["total_params"] = blob.size();
    topo["params_file"] = path_prefix + ".bin";

    std::ofstream jf(path_prefix + ".json");
    if (!jf) throw Error("cannot write checkpoint json: " + path_prefix + ".json");
    jf << topo.dump(2) << "\n";

    std::ofstream bf(path_prefix + ".bin", std::ios::binary);
    if (!bf) throw Error("cannot write checkpoint blob: " + path_prefix + ".bin");
    for (double v : blob) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        for (int i = 0; i < 8; ++i) {
            char byte = static_cast<char>((bits >> (8 * i)) & 0xFF);
            bf.write(&byte, 1);
        }
    }
}

inline qnet::HannNetwork load_checkpoint(const std::string& path_prefix) {
    std::ifstream jf(path_prefix + ".json");
    if (!jf) throw Error("cannot open checkpoint json: " + path_prefix + ".json");
    json topo = json::parse(jf);

    qnet::HannNetwork net;
    net.input_dim = topo.at("input_dim").get<int>();
    net.latent_dim = topo.at("latent_dim").get<int>();
    net.k = topo.at("k").get<int>();
    net.num_classes = topo.at("num_classes").get<int>();
    net.out_dim = topo.at("out_dim").get<int>();
    net.has_latent = topo.at("has_latent").get<bool>();
    net.head_kind = topo.at("head").get<std::string>() == "mlp2k" ? qnet::HeadKind::Mlp2k
                                                                  : qnet::HeadKind::Resnet1000;
    std::string qkind = topo.at("quantizer").at("kind").get<std::string>();
    net.quantizer = qkind == "ste_sign"
                        ? qnet::QuantizerKind::ste_sign(topo.at("quantizer").at("clip").get<double>())
                        : qnet::QuantizerKind::swish_sign(topo.at("quantizer").at("beta").get<double>());

    std::ifstream bf(path_prefix + ".bin", std::ios::binary);
    if (!bf) throw Error("cannot open checkpoint blob: " + path_prefix + ".bin");
    std::vector<unsigned char> raw((std::istreambuf_iterator<char>(bf)),
                                   std::istreambuf_iterator<char>());
    if (raw.size() % 8 != 0) throw Error("checkpoint blob length is not a multiple of 8");
    std::vector<double> blob(raw.size() / 8);
    for (std::size_t i = 0; i < blob.size(); ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b)
            bits |= static_cast<std::uint64_t>(raw[i * 8 + static_cast<std::size_t>(b)]) << (8 * b);
        std::memcpy(&blob[i], &bits, 8);
    }
    if (blob.size() != topo.at("total_params").get<std::size_t>())
        throw Error("checkpoint blob size disagrees with manifest");

    for (const auto& entry : topo.at("layers")) {
        std::string name = entry.at("name").get<std::string>();
        if (name == "latent")
            detail::read_layer(entry, blob, net.latent);
        else if (name == "hyper")
            detail::read_layer(entry, blob, net.hyper);
        else if (name == "head1")
            detail::read_layer(entry, blob, net.head1);
        else if (name == "head2")
            detail::read_layer(entry, blob, net.head2);
        else if (name == "skip")
            detail::read_layer(entry, blob, net.skip);
        else
            throw Error("checkpoint: unknown layer '" + name + "'");
    }
    return net;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write file: " + path);
    out << content;
}

inline void write_json_file(const std::string& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

}  // namespace hann::io
