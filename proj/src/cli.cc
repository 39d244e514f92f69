// Copyright 2026 The qseek Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qseek/cli.h"

#include <algorithm>
#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>

#include "qseek/commands.h"
#include "qseek/error.h"
#include "qseek/session_service.h"
#include "qseek/synthetic.h"

namespace qseek {

namespace {

// Raw option values; turned into a RunConfig after parsing so that kinds and
// optional fields are validated in one place.
struct RunFlags {
  RunConfig config;
  std::size_t n = 0;  // 0 = 1% of the pool
  std::string chat = "mock", embed = "mock", caption = "mock", answer = "mock";
  std::string prompts_dir;
  long long timeout_ms = 30000;
  int retries = 2;
  long long backoff_ms = 200;

  RunConfig Build() const {
    RunConfig c = config;
    if (n > 0) c.episode.n = n;
    c.backends.chat = ParseBackendKind(chat);
    c.backends.embed = ParseBackendKind(embed);
    c.backends.caption = ParseBackendKind(caption);
    c.backends.answer = ParseBackendKind(answer);
    if (!prompts_dir.empty()) c.prompts_dir = prompts_dir;
    for (BackendConfig* b :
         {&c.chat_remote, &c.embed_remote, &c.caption_remote, &c.answer_remote}) {
      b->timeout = std::chrono::milliseconds(timeout_ms);
      b->retry.retries = retries;
      b->retry.backoff = std::chrono::milliseconds(backoff_ms);
    }
    c.episode.Validate();
    return c;
  }
};

void AddBackendOptions(CLI::App* app, RunFlags& f) {
  RunConfig& c = f.config;
  const auto kinds = CLI::IsMember({"mock", "remote"});
  app->add_option("--backend.chat", f.chat, "mock|remote")->check(kinds)->envname("QSEEK_BACKEND_CHAT");
  app->add_option("--backend.embed", f.embed, "mock|remote")->check(kinds)->envname("QSEEK_BACKEND_EMBED");
  app->add_option("--backend.caption", f.caption, "mock|remote")->check(kinds)->envname("QSEEK_BACKEND_CAPTION");
  app->add_option("--backend.answer", f.answer, "mock|remote")->check(kinds)->envname("QSEEK_BACKEND_ANSWER");
  app->add_option("--chat-endpoint", c.chat_remote.endpoint)->envname("QSEEK_CHAT_ENDPOINT");
  app->add_option("--chat-model", c.chat_remote.model)->envname("QSEEK_CHAT_MODEL");
  app->add_option("--chat-token-env", c.chat_remote.token_env,
                  "environment variable holding the chat bearer token")
      ->envname("QSEEK_CHAT_TOKEN_ENV");
  app->add_option("--embed-endpoint", c.embed_remote.endpoint)->envname("QSEEK_EMBED_ENDPOINT");
  app->add_option("--embed-token-env", c.embed_remote.token_env)->envname("QSEEK_EMBED_TOKEN_ENV");
  app->add_option("--caption-endpoint", c.caption_remote.endpoint)->envname("QSEEK_CAPTION_ENDPOINT");
  app->add_option("--caption-token-env", c.caption_remote.token_env)->envname("QSEEK_CAPTION_TOKEN_ENV");
  app->add_option("--answer-endpoint", c.answer_remote.endpoint)->envname("QSEEK_ANSWER_ENDPOINT");
  app->add_option("--answer-token-env", c.answer_remote.token_env)->envname("QSEEK_ANSWER_TOKEN_ENV");
  app->add_option("--timeout-ms", f.timeout_ms)->check(CLI::PositiveNumber)->envname("QSEEK_TIMEOUT_MS");
  app->add_option("--retries", f.retries)->check(CLI::NonNegativeNumber)->envname("QSEEK_RETRIES");
  app->add_option("--backoff-ms", f.backoff_ms)->check(CLI::NonNegativeNumber)->envname("QSEEK_BACKOFF_MS");
  app->add_option("--mock-dim", c.mock_dimension, "offline embedder dimension")
      ->check(CLI::PositiveNumber)->envname("QSEEK_MOCK_DIM");
  app->add_option("--mock-seed", c.mock_seed, "offline embedder seed")->envname("QSEEK_MOCK_SEED");
}

void AddEpisodeOptions(CLI::App* app, RunFlags& f) {
  EpisodeConfig& e = f.config.episode;
  app->add_option("--pool", f.config.pool_path, "pool file")->envname("QSEEK_POOL");
  app->add_option("--rounds", e.max_rounds, "dialogue rounds per episode")->envname("QSEEK_ROUNDS");
  app->add_option("--n", f.n, "retrieval candidates per round (0: 1% of the pool)")->envname("QSEEK_N");
  app->add_option("--m", e.m, "clusters / captions in the retrieval context")
      ->check(CLI::PositiveNumber)->envname("QSEEK_M");
  app->add_option("--k-questions", e.questions_per_round, "questions sampled per round")
      ->check(CLI::PositiveNumber)->envname("QSEEK_K_QUESTIONS");
  app->add_option("--K", e.k, "cutoff for online reporting")->check(CLI::PositiveNumber)->envname("QSEEK_K");
  app->add_option("--seed", e.seed)->envname("QSEEK_SEED");
  app->add_flag("--early-stop", e.early_stop, "stop an episode once the target ranks first");
  app->add_option("--softmax-temperature", e.softmax_temperature)
      ->check(CLI::PositiveNumber)->envname("QSEEK_SOFTMAX_TEMPERATURE");
  app->add_flag("--trace", e.trace, "attach per-round diagnostics to the log");
  app->add_option("--prompts-dir", f.prompts_dir, "directory overriding the built-in prompts")
      ->envname("QSEEK_PROMPTS_DIR");
  auto& s = e.sampling;
  app->add_option("--qgen-temperature", s.question_generation.temperature);
  app->add_option("--qgen-max-tokens", s.question_generation.max_output_tokens);
  app->add_option("--reform-temperature", s.reformulation.temperature);
  app->add_option("--reform-max-tokens", s.reformulation.max_output_tokens);
  app->add_option("--filter-temperature", s.filtering.temperature);
  app->add_option("--filter-max-tokens", s.filtering.max_output_tokens);
  AddBackendOptions(app, f);
}

void PrintAblation(const std::vector<AblationRow>& rows, std::ostream& out) {
  out << "m\teffective_m\tBRI\tfailures\n";
  for (const auto& r : rows) {
    out << r.m << '\t' << r.effective_m << '\t';
    if (r.bri) {
      out << *r.bri;
    } else {
      out << "n/a";
    }
    out << '\t' << r.failures << '\n';
  }
}

// CLI11 reads config files only through the root app and expects sections
// for subcommand options. To keep per-subcommand files with plain keys,
// "--config FILE" is expanded into flags before parsing. Keys given on the
// command line win; since expanded keys count as given, environment
// variables fill only what neither sets. A [<subcommand>] section is honoured
// too; other sections are ignored.
std::vector<std::string> ExpandConfigFile(const std::vector<std::string>& args) {
  std::size_t sub = 0;
  while (sub < args.size() && args[sub].rfind("-", 0) == 0) ++sub;
  if (sub == args.size()) return args;
  std::vector<std::string> out;
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i > sub && args[i] == "--config" && i + 1 < args.size()) {
      path = args[++i];
    } else if (i > sub && args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      out.push_back(args[i]);
    }
  }
  if (!path) return args;
  std::ifstream in(*path);
  if (!in) throw CLI::FileError::Missing(*path);
  auto given = [&](const std::string& flag) {
    for (const auto& a : out) {
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    }
    return false;
  };
  for (const CLI::ConfigItem& item : CLI::ConfigTOML().from_config(in)) {
    if (item.name == "++" || item.name == "--") continue;
    if (!item.parents.empty() && (item.parents.size() > 1 || item.parents[0] != args[sub])) continue;
    std::string key = item.name;
    std::replace(key.begin(), key.end(), '_', '-');
    const std::string flag = "--" + key;
    if (given(flag)) continue;
    std::string value;
    for (std::size_t i = 0; i < item.inputs.size(); ++i) value += (i ? "," : "") + item.inputs[i];
    out.push_back(item.inputs.empty() ? flag : flag + "=" + value);
  }
  return out;
}

std::atomic<SessionServer*> g_server{nullptr};

extern "C" void StopServer(int) {
  if (SessionServer* s = g_server.load()) s->Stop();
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::string config_file;  // consumed by ExpandConfigFile
  CLI::App app("qseek: interactive text-to-image retrieval over dialogue rounds", "qseek");
  app.require_subcommand(1);

  // synth
  std::size_t synth_images = 2000, synth_queries = 10;
  std::uint64_t synth_seed = 1;
  std::string synth_captions, synth_dataset;
  CLI::App* synth = app.add_subcommand("synth", "write a synthetic caption corpus and dataset");
  synth->add_option("--images", synth_images)->check(CLI::PositiveNumber);
  synth->add_option("--queries", synth_queries);
  synth->add_option("--seed", synth_seed);
  synth->add_option("--captions-out", synth_captions)->required();
  synth->add_option("--dataset-out", synth_dataset)->required();

  // embed
  RunFlags embed_flags;
  std::string embed_input;
  CLI::App* embed = app.add_subcommand("embed", "embed a caption / image list into a pool file");
  embed->add_option("--config", config_file, "TOML file of option values (flags override it)");
  embed->add_option("--input", embed_input, "JSONL of {id, caption?, image_uri?}")->required();
  embed->add_option("--out", embed_flags.config.out_path, "pool file to write")->required();
  AddBackendOptions(embed, embed_flags);

  // run
  RunFlags run_flags;
  CLI::App* run = app.add_subcommand("run", "simulate episodes for every dataset query");
  run->add_option("--config", config_file, "TOML file of option values (flags override it)");
  run->add_option("--dataset", run_flags.config.dataset_path)->required()->envname("QSEEK_DATASET");
  run->add_option("--out", run_flags.config.out_path, "episode log file")->required();
  run->add_option("--parallelism", run_flags.config.parallelism)
      ->check(CLI::PositiveNumber)->envname("QSEEK_PARALLELISM");
  AddEpisodeOptions(run, run_flags);

  // eval
  std::string eval_log, eval_out;
  std::size_t eval_k = 10;
  long long eval_cutoff = -1;
  CLI::App* eval = app.add_subcommand("eval", "compute metrics over an episode log");
  eval->add_option("--log", eval_log)->required();
  eval->add_option("--K", eval_k)->check(CLI::PositiveNumber);
  eval->add_option("--cutoff", eval_cutoff, "last round to include (default: all)");
  eval->add_option("--out", eval_out, "write the JSON report here");

  // ablate-m
  RunFlags ablate_flags;
  std::vector<std::size_t> ablate_ms{5, 10, 15, 20};
  CLI::App* ablate = app.add_subcommand("ablate-m", "BRI for several cluster counts");
  ablate->add_option("--config", config_file, "TOML file of option values (flags override it)");
  ablate->add_option("--dataset", ablate_flags.config.dataset_path)->required();
  ablate->add_option("--out", ablate_flags.config.out_path, "JSON report; logs go next to it")->required();
  ablate->add_option("--m-values", ablate_ms)->delimiter(',')->check(CLI::PositiveNumber);
  ablate->add_option("--parallelism", ablate_flags.config.parallelism)->check(CLI::PositiveNumber);
  AddEpisodeOptions(ablate, ablate_flags);

  // serve
  RunFlags serve_flags;
  std::string host = "127.0.0.1", static_dir, session_log;
  int port = 8080;
  bool live_only = false;
  CLI::App* serve = app.add_subcommand("serve", "HTTP session service for interactive search");
  serve->add_option("--config", config_file, "TOML file of option values (flags override it)");
  serve->add_option("--host", host)->envname("QSEEK_HOST");
  serve->add_option("--port", port)->envname("QSEEK_PORT");
  serve->add_option("--static-dir", static_dir, "serve built UI assets from here");
  serve->add_option("--session-log", session_log, "append ended sessions to this log");
  serve->add_flag("--live-only", live_only, "reject target_id (no rank reporting)");
  AddEpisodeOptions(serve, serve_flags);

  try {
    const std::vector<std::string> expanded = ExpandConfigFile(args);
    std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    for (CLI::App* sub : app.get_subcommands()) err << sub->help();
    return kExitUsage;
  }

  try {
    if (*synth) {
      const SyntheticCorpus corpus = MakeSyntheticCorpus(synth_images, synth_queries, synth_seed);
      std::ofstream captions(synth_captions, std::ios::trunc);
      std::ofstream dataset(synth_dataset, std::ios::trunc);
      if (!captions || !dataset) throw InvalidArgument("cannot write synth outputs");
      WriteCaptionFile(corpus, captions);
      WriteDatasetFile(corpus.queries, dataset);
      err << "wrote " << corpus.images.size() << " captions and " << corpus.queries.size()
          << " queries\n";
    } else if (*embed) {
      const EmbedResult result = CmdEmbed(embed_input, embed_flags.Build());
      for (const auto& f : result.failures) {
        err << "skipped line " << f.line << (f.id.empty() ? "" : " (" + f.id + ")") << ": "
            << f.reason << '\n';
      }
      err << "embedded " << result.pool.size() << " records, " << result.failures.size()
          << " failed\n";
    } else if (*run) {
      const RunConfig config = run_flags.Build();
      const BatchResult result = CmdRun(config);
      err << "ran " << result.logs.size() << " episodes, " << result.failures
          << " failed; logs in " << config.out_path << '\n';
    } else if (*eval) {
      std::optional<std::size_t> cutoff;
      if (eval_cutoff >= 0) cutoff = static_cast<std::size_t>(eval_cutoff);
      const MetricReport report = CmdEval(eval_log, eval_k, cutoff);
      if (!eval_out.empty()) {
        std::ofstream f(eval_out, std::ios::trunc);
        if (!f) throw InvalidArgument("cannot write '" + eval_out + "'");
        f << ToJson(report).dump(2) << '\n';
      } else {
        out << ToJson(report).dump(2) << '\n';
      }
      err << FormatReport(report);
    } else if (*ablate) {
      const auto rows = CmdAblateM(ablate_flags.Build(), ablate_ms, err);
      PrintAblation(rows, out);
    } else if (*serve) {
      const RunConfig config = serve_flags.Build();
      auto pool = std::make_shared<const ImagePool>(LoadPool(config.pool_path));
      const EpisodeRunner runner(*pool, config.episode, MakeBackends(config, pool),
                                 LoadPrompts(config));
      SessionOptions options;
      options.default_k = config.episode.k;
      options.evaluation_mode = !live_only;
      options.seed = config.episode.seed;
      if (!session_log.empty()) options.log_path = session_log;
      SessionManager manager(runner, options);
      SessionServer server(manager, static_dir.empty() ? std::nullopt
                                                       : std::optional<std::string>(static_dir));
      g_server = &server;
      std::signal(SIGINT, StopServer);
      std::signal(SIGTERM, StopServer);
      err << "listening on http://" << host << ":" << port << '\n';
      const bool ok = server.Listen(host, port);
      g_server = nullptr;
      manager.FlushAll();
      if (!ok) throw Error("could not listen on " + host + ":" + std::to_string(port));
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace qseek
