// Command-line front end: simulation, embedding, inventory construction,
// the full separation pipeline, cluster sweeps, and evaluation.
#include "css/emb_io.hpp"
#include "css/metrics.hpp"
#include "css/pipeline.hpp"
#include "css/wav_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace css;

namespace {

void write_json(const fs::path& path, const json& j) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << j.dump(2) << "\n";
}

json read_json(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path.string());
    return json::parse(f);
}

json script_to_json(const RecordingScript& script) {
    json events = json::array();
    for (const auto& e : script.events)
        events.push_back({{"speaker", e.speaker_id}, {"onset_s", e.onset}, {"offset_s", e.offset}});
    return {{"duration_s", script.duration}, {"events", events}};
}

RecordingScript script_from_json(const json& j) {
    RecordingScript script;
    script.duration = j.at("duration_s").get<double>();
    for (const auto& e : j.at("events")) {
        UtteranceEvent ev;
        ev.speaker_id = e.at("speaker").get<int>();
        ev.onset = e.at("onset_s").get<double>();
        ev.offset = e.at("offset_s").get<double>();
        script.events.push_back(ev);
        script.speaker_ids.insert(ev.speaker_id);
    }
    return script;
}

void write_recording(const fs::path& dir, const SimulatedRecording& rec, const json& meta) {
    fs::create_directories(dir);
    write_wav(dir / "mixture.wav", rec.mixture);
    write_wav(dir / "noise.wav", rec.noise);
    for (const auto& [id, src] : rec.clean_sources)
        write_wav(dir / ("source_" + std::to_string(id) + ".wav"), src);
    write_json(dir / "script.json", script_to_json(rec.script));
    write_json(dir / "meta.json", meta);
}

SimulatedRecording load_recording(const fs::path& dir) {
    SimulatedRecording rec;
    rec.mixture = read_wav(dir / "mixture.wav");
    rec.noise = read_wav(dir / "noise.wav");
    rec.script = script_from_json(read_json(dir / "script.json"));
    for (int id : rec.script.speaker_ids)
        rec.clean_sources.emplace(id, read_wav(dir / ("source_" + std::to_string(id) + ".wav")));
    return rec;
}

const char* perm_name(StitchPermutation p) {
    return p == StitchPermutation::Identity ? "identity" : "swap";
}

json segment_logs_to_json(const std::vector<SegmentLog>& logs) {
    json out = json::array();
    for (const auto& l : logs) {
        json scores = json::array();
        for (const auto& [idx, w] : l.top_scores) scores.push_back({{"profile", idx}, {"weight", w}});
        out.push_back({{"start_s", l.start},
                       {"end_s", l.end},
                       {"p1", l.p1_index},
                       {"p2", l.p2_index},
                       {"top_scores", scores},
                       {"permutation", perm_name(l.permutation)}});
    }
    return out;
}

json inventory_provenance(const SpeakerInventory& inv) {
    if (const auto* e = std::get_if<EnrolledProvenance>(&inv.provenance))
        return {{"kind", "enrolled"}, {"speaker_ids", e->speaker_ids}};
    const auto& c = std::get<ClusteredProvenance>(inv.provenance);
    return {{"kind", "clustered"}, {"cluster_sizes", c.cluster_sizes}, {"inertia", c.inertia}};
}

SpeakerInventory load_inventory(const fs::path& path) {
    SpeakerInventory inv;
    inv.profiles = read_matrix(path, "EMB1");
    for (Eigen::Index i = 0; i < inv.profiles.rows(); ++i) inv.profiles.row(i).normalize();
    inv.provenance = EnrolledProvenance{};
    return inv;
}

json bucket_report_to_json(const SegmentBucketReport& rep) {
    json buckets = json::object();
    for (int b = 0; b < 5; ++b) {
        const auto& scores = rep.bucket_scores[static_cast<std::size_t>(b)];
        double mean = 0.0;
        for (double v : scores) mean += v;
        buckets[bucket_label(b)] = {{"count", scores.size()},
                                    {"mean_db", scores.empty() ? json() : json(mean / scores.size())}};
    }
    return buckets;
}

struct PipelineArtifacts {
    ContinuousStreams result;
    json report;
};

PipelineArtifacts run_pipeline_once(const SimulatedRecording* truth, const Waveform& mixture,
                                    const CssConfig& cfg, Metric metric) {
    PipelineArtifacts art;
    art.result = run_css(mixture, cfg);

    json report;
    report["backend"] = cfg.backend == BackendKind::OracleIrm ? "oracle" : "affinity";
    report["clusters"] = cfg.m;
    report["seed"] = cfg.seed;
    if (truth != nullptr) {
        const EvalReport utt = eval_utterances(art.result.streams, *truth, metric);
        json per_utt = json::array();
        for (const auto& u : utt.utterances)
            per_utt.push_back({{"speaker", u.speaker_id},
                               {"onset_s", u.onset},
                               {"offset_s", u.offset},
                               {"score_db", u.score_db},
                               {"best_stream", u.best_stream}});
        const std::array<Waveform, 2> unprocessed{mixture, mixture};
        report["utterance_eval"] = {{"metric", metric == Metric::SiSdr ? "si_sdr" : "snr"},
                                    {"mean_db", utt.mean_db},
                                    {"unprocessed_mean_db",
                                     eval_utterances(unprocessed, *truth, metric).mean_db},
                                    {"utterances", per_utt}};
        report["segment_eval_by_overlap"] =
            bucket_report_to_json(eval_segments_bucketed(art.result.streams, *truth, metric));
        if (std::holds_alternative<ClusteredProvenance>(art.result.inventory.provenance)) {
            const PurityReport pur = purity(art.result.inventory, *truth);
            report["cluster_purity"] = {{"mean", pur.mean_purity},
                                        {"evaluated_chunks", pur.evaluated_chunks}};
        }
    }
    art.report = std::move(report);
    return art;
}

int run(int argc, char** argv) {
    CLI::App app{"Continuous speech separation with a self-informed speaker inventory"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Configuration file (key = value), overridden by flags");
    app.get_config_formatter_base()->comment('#');

    // ---------------- simulate ----------------
    auto* sim = app.add_subcommand("simulate", "Generate long multi-talker recordings");
    int sim_speakers = 2, sim_count = 1;
    double sim_duration = 60.0, sim_overlap = 0.30;
    std::uint64_t sim_seed = 0;
    std::string sim_out, sim_corpus;
    sim->add_option("--speakers", sim_speakers, "Speakers in the pool")->check(CLI::Range(2, 64));
    sim->add_option("--duration", sim_duration, "Recording length in seconds");
    sim->add_option("--overlap", sim_overlap, "Target overlap ratio");
    sim->add_option("--count", sim_count, "Number of recordings")->check(CLI::PositiveNumber);
    sim->add_option("--seed", sim_seed, "Top-level seed");
    sim->add_option("--out", sim_out, "Output directory")->required();
    sim->add_option("--corpus", sim_corpus, "WAV corpus directory (spk<id>/*.wav)");

    // ---------------- embed ----------------
    auto* emb = app.add_subcommand("embed", "Chunk embeddings of a WAV file");
    std::string emb_in, emb_out;
    double emb_chunk = kChunkSeconds;
    emb->add_option("--in", emb_in, "Input WAV")->required();
    emb->add_option("--out", emb_out, "Output embedding file (EMB1)")->required();
    emb->add_option("--chunk", emb_chunk, "Chunk length in seconds");

    // ---------------- inventory ----------------
    auto* invc = app.add_subcommand("inventory", "Build a speaker inventory");
    std::string inv_mixture, inv_out;
    std::vector<std::string> inv_enroll;
    int inv_m = 4;
    std::uint64_t inv_seed = 0;
    invc->add_option("--mixture", inv_mixture, "Mixture WAV for self-clustering");
    invc->add_option("--enroll", inv_enroll, "Enrollment WAVs (one per speaker)");
    invc->add_option("--clusters", inv_m, "Cluster count M for self-clustering");
    invc->add_option("--seed", inv_seed, "Seed for k-means");
    invc->add_option("--out", inv_out, "Output inventory file (EMB1)")->required();

    // ---------------- pipeline ----------------
    auto* pipe = app.add_subcommand("pipeline", "Run the full separation pipeline");
    std::string pipe_in, pipe_mixture, pipe_backend = "affinity", pipe_inventory, pipe_out,
                pipe_metric = "si_sdr";
    int pipe_m = 4;
    std::uint64_t pipe_seed = 0;
    double pipe_window = 4.0, pipe_hop = 3.0;
    pipe->add_option("--in", pipe_in, "Recording directory from `simulate`");
    pipe->add_option("--mixture", pipe_mixture, "Bare mixture WAV (no ground truth)");
    pipe->add_option("--backend", pipe_backend, "Mask backend")
        ->check(CLI::IsMember({"affinity", "oracle"}));
    pipe->add_option("--inventory", pipe_inventory, "Enrolled inventory file (EMB1)");
    pipe->add_option("--clusters", pipe_m, "Cluster count M for the self inventory");
    pipe->add_option("--seed", pipe_seed, "Seed");
    pipe->add_option("--window", pipe_window, "Segment window in seconds");
    pipe->add_option("--hop", pipe_hop, "Segment hop in seconds");
    pipe->add_option("--metric", pipe_metric, "Evaluation metric")
        ->check(CLI::IsMember({"si_sdr", "snr"}));
    pipe->add_option("--out", pipe_out, "Output directory")->required();

    // ---------------- sweep-clusters ----------------
    auto* sweep = app.add_subcommand("sweep-clusters", "Pipeline across several cluster counts");
    std::string sweep_in, sweep_out, sweep_metric = "si_sdr";
    std::vector<int> sweep_m{2, 3, 4};
    std::uint64_t sweep_seed = 0;
    sweep->add_option("--in", sweep_in, "Recording directory from `simulate`")->required();
    sweep->add_option("--clusters", sweep_m, "Cluster counts to sweep");
    sweep->add_option("--seed", sweep_seed, "Seed");
    sweep->add_option("--metric", sweep_metric, "Evaluation metric")
        ->check(CLI::IsMember({"si_sdr", "snr"}));
    sweep->add_option("--out", sweep_out, "Output directory")->required();

    // ---------------- eval ----------------
    auto* ev = app.add_subcommand("eval", "Score existing output streams against ground truth");
    std::string ev_streams, ev_truth, ev_metric = "si_sdr", ev_out;
    ev->add_option("--streams", ev_streams, "Directory with stream_0.wav / stream_1.wav")
        ->required();
    ev->add_option("--truth", ev_truth, "Recording directory from `simulate`")->required();
    ev->add_option("--metric", ev_metric, "Evaluation metric")
        ->check(CLI::IsMember({"si_sdr", "snr"}));
    ev->add_option("--out", ev_out, "Report JSON path (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    const auto parse_metric = [](const std::string& name) {
        return name == "snr" ? Metric::Snr : Metric::SiSdr;
    };

    if (sim->parsed()) {
        const fs::path out(sim_out);
        fs::create_directories(out);
        std::unique_ptr<SpeakerCorpus> corpus;
        if (!sim_corpus.empty())
            corpus = std::make_unique<WavDirCorpus>(sim_corpus);
        else
            corpus = std::make_unique<SyntheticCorpus>();

        json manifest;
        manifest["command"] = "simulate";
        manifest["config"] = {{"speakers", sim_speakers}, {"duration_s", sim_duration},
                              {"overlap", sim_overlap},   {"count", sim_count},
                              {"seed", sim_seed},         {"corpus", sim_corpus}};
        json recs = json::array();
        for (int i = 0; i < sim_count; ++i) {
            const std::uint64_t rec_seed = named_seed(sim_seed, "recording") + i;
            const SimulatedRecording rec =
                generate_recording(sim_speakers, sim_duration, sim_overlap, rec_seed, *corpus);
            char name[32];
            std::snprintf(name, sizeof(name), "rec_%03d", i);
            const double realized = overlap_ratio(rec.script);
            json meta = {{"seed", rec_seed},
                         {"speakers", sim_speakers},
                         {"duration_s", sim_duration},
                         {"target_overlap", sim_overlap},
                         {"realized_overlap", realized}};
            write_recording(out / name, rec, meta);
            recs.push_back({{"dir", name}, {"seed", rec_seed}, {"realized_overlap", realized}});
        }
        manifest["recordings"] = recs;
        write_json(out / "manifest.json", manifest);
        return 0;
    }

    if (emb->parsed()) {
        const ChunkEmbeddings ce = chunk_embeddings(read_wav(emb_in), emb_chunk);
        Eigen::MatrixXd rows(ce.chunks.size(), kEmbedDim);
        json index = json::array();
        for (std::size_t i = 0; i < ce.chunks.size(); ++i) {
            rows.row(static_cast<Eigen::Index>(i)) = ce.chunks[i].second.vector.transpose();
            index.push_back({{"row", i},
                             {"chunk", ce.chunks[i].first},
                             {"start_s", ce.chunks[i].first * emb_chunk}});
        }
        write_matrix(emb_out, rows, "EMB1");
        write_json(fs::path(emb_out).replace_extension(".json"),
                   {{"source", emb_in},
                    {"chunk_s", emb_chunk},
                    {"rows", index},
                    {"silent_chunks", ce.silent_indices}});
        return 0;
    }

    if (invc->parsed()) {
        SpeakerInventory inv;
        json meta;
        if (!inv_enroll.empty()) {
            std::vector<Waveform> enr;
            for (const std::string& p : inv_enroll) enr.push_back(read_wav(p));
            inv = build_inventory_from_enrollments(enr);
            meta = {{"mode", "enrolled"}, {"enrollments", inv_enroll}};
        } else if (!inv_mixture.empty()) {
            inv = build_inventory_self(read_wav(inv_mixture), inv_m, inv_seed);
            meta = {{"mode", "self"}, {"mixture", inv_mixture}, {"clusters", inv_m},
                    {"seed", inv_seed}};
        } else {
            throw CLI::ValidationError("inventory", "requires --mixture or --enroll");
        }
        write_matrix(inv_out, inv.profiles, "EMB1");
        meta["provenance"] = inventory_provenance(inv);
        write_json(fs::path(inv_out).replace_extension(".json"), meta);
        return 0;
    }

    if (pipe->parsed()) {
        if (pipe_in.empty() == pipe_mixture.empty())
            throw CLI::ValidationError("pipeline", "requires exactly one of --in / --mixture");

        std::optional<SimulatedRecording> truth;
        Waveform mixture;
        if (!pipe_in.empty()) {
            truth = load_recording(pipe_in);
            mixture = truth->mixture;
        } else {
            mixture = read_wav(pipe_mixture);
        }

        CssConfig cfg;
        cfg.m = pipe_m;
        cfg.seed = pipe_seed;
        cfg.window = pipe_window;
        cfg.hop = pipe_hop;
        cfg.backend = pipe_backend == "oracle" ? BackendKind::OracleIrm : BackendKind::Affinity;
        if (cfg.backend == BackendKind::OracleIrm) {
            if (!truth) throw CLI::ValidationError("pipeline", "oracle backend requires --in");
            cfg.truth = &*truth;
        }
        if (!pipe_inventory.empty()) cfg.enrolled = load_inventory(pipe_inventory);

        const PipelineArtifacts art = run_pipeline_once(
            truth ? &*truth : nullptr, mixture, cfg, parse_metric(pipe_metric));

        const fs::path out(pipe_out);
        fs::create_directories(out);
        write_wav(out / "stream_0.wav", art.result.streams[0]);
        write_wav(out / "stream_1.wav", art.result.streams[1]);
        write_json(out / "css_log.json",
                   {{"config",
                     {{"clusters", pipe_m},
                      {"seed", pipe_seed},
                      {"backend", pipe_backend},
                      {"window_s", pipe_window},
                      {"hop_s", pipe_hop},
                      {"inventory_mode", pipe_inventory.empty() ? "self" : "enrolled"}}},
                    {"inventory", inventory_provenance(art.result.inventory)},
                    {"segments", segment_logs_to_json(art.result.segment_logs)}});
        if (truth) {
            write_json(out / "report.json", art.report);
            std::ofstream txt(out / "report.txt", std::ios::binary);
            txt << eval_utterances(art.result.streams, *truth, parse_metric(pipe_metric)).to_text()
                << "\n"
                << eval_segments_bucketed(art.result.streams, *truth, parse_metric(pipe_metric))
                       .to_text();
        }
        return 0;
    }

    if (sweep->parsed()) {
        const SimulatedRecording truth = load_recording(sweep_in);
        const Metric metric = parse_metric(sweep_metric);
        const fs::path out(sweep_out);
        fs::create_directories(out);

        json rows = json::array();
        std::ostringstream table;
        table << "clusters  mean_" << sweep_metric << "_db\n";
        double best = -1e9, worst = 1e9;
        for (int m : sweep_m) {
            CssConfig cfg;
            cfg.m = m;
            cfg.seed = sweep_seed;
            cfg.backend = BackendKind::Affinity;
            try {
                const PipelineArtifacts art = run_pipeline_once(&truth, truth.mixture, cfg, metric);
                const double mean = art.report["utterance_eval"]["mean_db"].get<double>();
                rows.push_back({{"clusters", m}, {"mean_db", mean}, {"status", "ok"}});
                table << m << "         " << mean << "\n";
                best = std::max(best, mean);
                worst = std::min(worst, mean);
            } catch (const std::exception& ex) {
                rows.push_back({{"clusters", m}, {"status", "failed"}, {"error", ex.what()}});
                table << m << "         failed: " << ex.what() << "\n";
            }
        }
        json summary = {{"command", "sweep-clusters"},
                        {"seed", sweep_seed},
                        {"metric", sweep_metric},
                        {"rows", rows}};
        if (best > -1e9 && worst < 1e9) summary["spread_db"] = best - worst;
        write_json(out / "sweep.json", summary);
        std::ofstream(out / "sweep.txt", std::ios::binary) << table.str();
        return 0;
    }

    if (ev->parsed()) {
        const SimulatedRecording truth = load_recording(ev_truth);
        const std::array<Waveform, 2> streams{read_wav(fs::path(ev_streams) / "stream_0.wav"),
                                              read_wav(fs::path(ev_streams) / "stream_1.wav")};
        const Metric metric = parse_metric(ev_metric);
        const EvalReport rep = eval_utterances(streams, truth, metric);
        json out = {{"metric", ev_metric},
                    {"mean_db", rep.mean_db},
                    {"segment_eval_by_overlap",
                     bucket_report_to_json(eval_segments_bucketed(streams, truth, metric))}};
        if (ev_out.empty())
            std::cout << out.dump(2) << "\n";
        else
            write_json(ev_out, out);
        return 0;
    }

    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
}
