#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "core/harness.hpp"
#include "core/text.hpp"
#include "fixture_server.hpp"
#include "fixtures.hpp"

#include <filesystem>
#include <fstream>

using namespace ovql;
using namespace ovql::harness;
using dataset::Corpus;
using dataset::Instance;
using dataset::Split;
using nlohmann::ordered_json;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Instance make_instance(std::string id, std::string nl, std::string query, Split split) {
    Instance inst;
    inst.id = std::move(id);
    inst.nl = std::move(nl);
    inst.query = std::move(query);
    inst.split = split;
    return inst;
}

// the five castle example pairs in figure order
std::vector<Instance> castle_shots() {
    return {
        make_instance("s1", "All historic castles in Germany.", fixtures::kCastleAreaQuery,
                      Split::Train),
        make_instance("s2", "Find every castle in Luxemburg,Neatherlands and Belgium.",
                      fixtures::kCastleBeneluxQuery, Split::Train),
        make_instance("s3", "Castles in current view.", fixtures::kCastleBboxQuery, Split::Train),
        make_instance("s4", "Castles in current view.",
                      "[out:json][timeout:25];(node[\"historic\"=\"castle\"]({{bbox}});\n"
                      "way[\"historic\"=\"castle\"]({{bbox}});relation[\"historic\"=\"castle\"]"
                      "({{bbox}}););\nout;>;out skel qt;",
                      Split::Train),
        make_instance("s5", "castles in Tuscany.", fixtures::kCastleTuscanyQuery, Split::Train),
    };
}

}  // namespace

TEST_CASE("few-shot prompt matches the golden transcription") {
    auto shots_data = castle_shots();
    std::vector<const Instance*> shots;
    for (const auto& s : shots_data) shots.push_back(&s);
    std::string prompt = build_prompt(shots, "castle in Deutschland");
    CHECK(prompt == slurp(std::string(TEST_DATA_DIR) + "/prompt_fewshot.golden.txt"));
}

TEST_CASE("prompt template invariants") {
    auto shots_data = castle_shots();
    std::vector<const Instance*> shots{&shots_data[0]};

    std::string with_shot = build_prompt(shots, "castles");
    std::string zero = build_prompt({}, "castles");
    CHECK(with_shot.substr(with_shot.size() - 16) == "Overpass Query:\n");
    CHECK(zero.substr(zero.size() - 16) == "Overpass Query:\n");
    CHECK(zero ==
          "The OverpassQL language allows one to formulate questions to the OpenStreetMap "
          "database.\n\nInput:\ncastles\n\nOverpass Query:\n");
    // injective in the shot list
    CHECK(with_shot != build_prompt({}, "castles"));
    CHECK(build_prompt(shots, "a") != build_prompt(shots, "b"));
}

TEST_CASE("refine prompt matches the golden transcription") {
    std::vector<RefineShot> shots = {
        {"atms in Germany",
         "[out:json][timeout:25];area[\"name\"=\"Germany\"]->.a;(node[\"amenity\"=\"atm\"](area."
         "a);\nway[\"amenity\"=\"atm\"](area.a);relation[\"amenity\"=\"atm\"](area.a););\n"
         "out;>;out skel qt;",
         "[out:json][timeout:25];{{geocodeArea:\"Deutschland\"}}->.searchArea;\n"
         "(node[\"amenity\"=\"atm\"](area.searchArea);way[\"amenity\"=\"atm\"](area.searchArea);"
         "\nrelation[\"amenity\"=\"atm\"](area.searchArea););out center;"},
        {"ATMs and banks with ATMs in Berlin.",
         "[out:json][timeout:25];{{geocodeArea:\"Berlin\"}}->.searchArea;\n"
         "(node[\"amenity\"=\"atm\"](area.searchArea);node[\"amenity\"=\"bank\"][\"atm=yes\"]"
         "(area.searchArea););\nout;out;>;out skel qt;",
         "[out:json][timeout:25];\narea[\"name\"=\"Berlin\"]->.a;(node[\"amenity\"=\"bank\"]"
         "[\"atm\"=\"yes\"](area.a);\nnode[\"amenity\"=\"atm\"](area.a);way[\"amenity\"=\"bank\"]"
         "[\"atm\"=\"yes\"](area.a);>;\nway[\"amenity\"=\"atm\"](area.a);>;);out;"},
    };
    std::string hypothesis =
        "[out:json][timeout:25]; {{geocodeArea:\"B\xC3\xBCrggen\"}}->.searchArea;\n"
        "{{geocodeArea:\"Kreis Viersen\"}}->.searchArea2;\n"
        "(node[\"amenity\"=\"bank\"](area.searchArea)(area.searchArea2);\n"
        "node[\"amenity\"=\"atm\"](area.searchArea)(area.searchArea2);\n"
        "way[\"amenity\"=\"bank\"](area.searchArea)(area.searchArea2);\n"
        "relation[\"amenity\"=\"bank\"](area.searchArea)(area.searchArea2); ); out; >; out skel "
        "qt;";
    std::string prompt =
        build_refine_prompt("Banks or ATMS in B\xC3\xBCrggen of Kreis Viersen.", hypothesis,
                            std::string("No Results found."), shots);
    CHECK(prompt == slurp(std::string(TEST_DATA_DIR) + "/prompt_refine.golden.txt"));

    // the no-feedback variant drops the framing paragraph entirely
    std::string without =
        build_refine_prompt("Banks or ATMS in B\xC3\xBCrggen of Kreis Viersen.", hypothesis,
                            std::nullopt, shots);
    CHECK(without.find("You will now get part") == std::string::npos);
    CHECK(without.find("No Results found.") == std::string::npos);
    CHECK(without.find("Improve on the Overpass Query or keep it if it is good enough:\n") !=
          std::string::npos);

    std::string empty_shots = build_refine_prompt("x", "out;", std::nullopt, {});
    CHECK(empty_shots.find("Here are a few examples") == std::string::npos);
    CHECK_THROWS_AS(build_refine_prompt("x", "", std::nullopt, {}), std::invalid_argument);
}

TEST_CASE("shot selection") {
    Corpus corpus;
    corpus.instances.push_back(make_instance("t1", "all peaks in Troms", "node[natural=peak];out;",
                                             Split::Train));
    corpus.instances.push_back(
        make_instance("t2", "all cafes in Berlin", "node[amenity=cafe];out;", Split::Train));
    corpus.instances.push_back(
        make_instance("t3", "drinking water in parks", "node[amenity=drinking_water];out;",
                      Split::Train));
    corpus.instances.push_back(
        make_instance("t4", "all peaks near Troms", "node[natural=peak](around:1);out;",
                      Split::Train));
    corpus.instances.push_back(
        make_instance("t5", "castles in Tuscany", "nwr[historic=castle];out;", Split::Train));
    corpus.rebuild_index();
    auto train = corpus.split_instances(Split::Train);

    SUBCASE("k = 0 gives an empty list") {
        CHECK(select_shots("anything", train, {ShotMode::RetrievalBleu, 0, 0}).empty());
    }
    SUBCASE("k beyond the train size throws") {
        CHECK_THROWS_AS(select_shots("x", train, {ShotMode::Random, 6, 1}),
                        std::invalid_argument);
    }
    SUBCASE("an identical input is ranked first, i.e. last in prompt order") {
        auto shots = select_shots("all peaks in Troms", train, {ShotMode::RetrievalBleu, 3, 0});
        REQUIRE(shots.size() == 3);
        CHECK(shots.back()->id == "t1");
    }
    SUBCASE("retrieval matches a brute-force ranking oracle") {
        std::string input = "all peaks in Troms";
        auto shots = select_shots(input, train, {ShotMode::RetrievalBleu, 5, 0});
        // brute force: sort by bleu descending, id ascending
        std::vector<std::pair<double, std::string>> ranked;
        for (const auto* t : train)
            ranked.emplace_back(metrics::bleu(t->nl, input).value, t->id);
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        REQUIRE(shots.size() == 5);
        for (std::size_t i = 0; i < 5; ++i)
            CHECK(shots[4 - i]->id == ranked[i].second);  // prompt order is reversed
        // similarity ascending along the prompt
        for (std::size_t i = 1; i < shots.size(); ++i) {
            CHECK(metrics::bleu(shots[i - 1]->nl, input).value <=
                  metrics::bleu(shots[i]->nl, input).value);
        }
    }
    SUBCASE("embedding retrieval ranks the identical text first") {
        HashEmbeddingProvider provider(128);
        auto shots = select_shots("castles in Tuscany", train,
                                  {ShotMode::RetrievalEmbedding, 2, 0}, &provider);
        CHECK(shots.back()->id == "t5");
        CHECK_THROWS_AS(
            select_shots("x", train, {ShotMode::RetrievalEmbedding, 2, 0}, nullptr),
            std::invalid_argument);
    }
    SUBCASE("random selection is seeded and without replacement") {
        auto a = select_shots("x", train, {ShotMode::Random, 5, 42});
        auto b = select_shots("x", train, {ShotMode::Random, 5, 42});
        CHECK(a == b);
        std::set<std::string> ids;
        for (const auto* s : a) ids.insert(s->id);
        CHECK(ids.size() == 5);
        auto c = select_shots("x", train, {ShotMode::Random, 5, 43});
        bool differs = false;
        for (std::size_t i = 0; i < a.size(); ++i) differs = differs || a[i]->id != c[i]->id;
        CHECK(differs);
    }
}

TEST_CASE("embedding providers return unit-norm vectors of a fixed dimension") {
    HashEmbeddingProvider hash(128);
    for (const char* text : {"all peaks in Troms", "castles", ""}) {
        auto v = hash.embed(text);
        REQUIRE(v.size() == 128);
        double norm = 0;
        for (float x : v) norm += static_cast<double>(x) * x;
        CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-6);
    }
    CHECK(hash.embed("same text") == hash.embed("same text"));

    // file-backed provider: vectors keyed by instance id, resolved by text
    Corpus corpus;
    corpus.instances.push_back(make_instance("i1", "first input", "out;", Split::Train));
    corpus.instances.push_back(make_instance("i2", "second input", "out;", Split::Train));
    corpus.rebuild_index();
    auto path = std::filesystem::temp_directory_path() / "ovql_vectors.tsv";
    {
        std::ofstream out(path);
        out << "i1\t3,4\n";
        out << "i2\t1,0\n";
    }
    FileEmbeddingProvider file(path, corpus);
    CHECK(file.dimension() == 2);
    auto v1 = file.embed("first input");
    CHECK(v1[0] == doctest::Approx(0.6));
    CHECK(v1[1] == doctest::Approx(0.8));
    CHECK(cosine(file.embed("second input"), file.embed("second input")) ==
          doctest::Approx(1.0));
    CHECK_THROWS(file.embed("unknown text"));
    std::filesystem::remove(path);
}

TEST_CASE("http embedding provider") {
    httplib::Server server;
    server.Post("/embed", [](const httplib::Request& req, httplib::Response& res) {
        auto body = nlohmann::ordered_json::parse(req.body);
        std::string text = body["text"];
        // toy embedding: [len, vowels]
        double vowels = 0;
        for (char c : text)
            vowels += (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') ? 1 : 0;
        nlohmann::ordered_json out;
        out["vector"] = {static_cast<double>(text.size()), vowels};
        res.set_content(out.dump(), "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpEmbeddingProvider provider("http://127.0.0.1:" + std::to_string(port));
    auto v = provider.embed("aaa");
    REQUIRE(v.size() == 2);
    double norm = 0;
    for (float x : v) norm += static_cast<double>(x) * x;
    CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-6);
    CHECK(provider.dimension() == 2);
    CHECK(cosine(provider.embed("eee"), provider.embed("aaa")) == doctest::Approx(1.0));

    server.stop();
    thread.join();
}

TEST_CASE("completion cleanup") {
    CHECK(clean_completion("out;\n\nInput:\nnext question") == "out;");
    CHECK(clean_completion("```\nnode(1);out;\n```") == "node(1);out;");
    CHECK(clean_completion("```overpassql\nnode(1);out;\n```\n") == "node(1);out;");
    CHECK(clean_completion("  out;  ") == "out;");
}

TEST_CASE("fixture generation client") {
    auto path = std::filesystem::temp_directory_path() / "ovql_client_map.jsonl";
    {
        std::ofstream out(path);
        ordered_json rec;
        rec["prompt_sha256"] = text::sha256_hex("the prompt");
        rec["completion"] = "node(1);out;";
        out << rec.dump() << '\n';
    }
    FixtureGenerationClient client(path);
    CHECK(client.generate("the prompt", {}, 100) == "node(1);out;");
    CHECK_THROWS_AS(client.generate("unknown prompt", {}, 100), GenerationError);
    std::filesystem::remove(path);
}

TEST_CASE("predictions round-trip") {
    Predictions preds;
    preds.upsert("a", "out;");
    preds.upsert("b", "node(1);\nout;");
    preds.upsert("a", "out meta;");  // upsert replaces
    auto path = std::filesystem::temp_directory_path() / "ovql_preds.jsonl";
    save_predictions(preds, path);
    Predictions loaded = load_predictions(path);
    CHECK(loaded.items == preds.items);
    REQUIRE(loaded.find("a") != nullptr);
    CHECK(loaded.find("a")->query == "out meta;");
    std::filesystem::remove(path);
}

namespace {

Corpus grounded_corpus() {
    Corpus corpus;
    corpus.instances.push_back(
        make_instance("g1", "node one", "node(1);out;", Split::Dev));
    corpus.instances.push_back(
        make_instance("g2", "nodes two and three", "node(id:2,3);out;", Split::Dev));
    corpus.instances.push_back(make_instance("g3", "node five", "node(5);out;", Split::Dev));
    corpus.instances.push_back(
        make_instance("tr1", "a training pair", "node(9);out;", Split::Train));
    corpus.rebuild_index();
    return corpus;
}

void populate_grounded_server(fixture::OverpassServer& server) {
    server.add_elements("node(1);out;", ordered_json::parse(R"([{"type":"node","id":1}])"));
    server.add_elements("node(id:2,3);out;",
                        ordered_json::parse(R"([{"type":"node","id":2},{"type":"node","id":3}])"));
    server.add_elements("node(5);out;", ordered_json::parse(R"([{"type":"node","id":5}])"));
    server.add_elements("node(9);out;", ordered_json::parse(R"([{"type":"node","id":9}])"));
    server.add_elements("node(7);out;", ordered_json::parse(R"([{"type":"node","id":7}])"));
    server.add_elements("node(2);out;", ordered_json::parse(R"([{"type":"node","id":2}])"));
    server.add_syntax_error("node[;", "Error: line 1: parse error: ']' expected");
}

exec::ExecutionConfig grounded_config(const std::string& url) {
    exec::ExecutionConfig cfg;
    cfg.endpoint_url = url;
    cfg.retry = {1, 0.0};
    cfg.request_timeout = 10.0;
    return cfg;
}

}  // namespace

TEST_CASE("run_eval with the identity system") {
    Corpus corpus = grounded_corpus();
    fixture::OverpassServer server;
    populate_grounded_server(server);
    server.start();
    exec::Executor executor(grounded_config(server.url()), nullptr);

    Predictions identity;
    for (const auto& inst : corpus.instances)
        if (inst.split == Split::Dev) identity.upsert(inst.id, inst.query);

    EvalReport report = run_eval(corpus, Split::Dev, identity, &executor);
    CHECK(report.rows.size() == 3);
    CHECK(report.aggregates.oqs.value == doctest::Approx(1.0));
    CHECK(report.aggregates.em_rate == 1.0);
    CHECK(report.aggregates.ex_rate == 1.0);
    CHECK(report.aggregates.ex_soft.value == doctest::Approx(1.0));
    CHECK(report.aggregates.errors == 0);
    CHECK(report.aggregates.oqs.display() == "100.0");
}

TEST_CASE("run_eval with corrupted predictions matches hand-computed numbers") {
    Corpus corpus = grounded_corpus();
    fixture::OverpassServer server;
    populate_grounded_server(server);
    server.start();
    exec::Executor executor(grounded_config(server.url()), nullptr);

    Predictions corrupted;
    corrupted.upsert("g1", "node(7);out;");  // disjoint result
    corrupted.upsert("g2", "node(2);out;");  // half of the reference
    corrupted.upsert("g3", "node[;");        // server parse error

    EvalReport report = run_eval(corpus, Split::Dev, corrupted, &executor);
    REQUIRE(report.rows.size() == 3);
    CHECK(report.aggregates.errors == 1);
    CHECK(report.aggregates.ex_rate == 0.0);
    CHECK(report.aggregates.ex_soft.value == doctest::Approx((0.0 + 0.5 + 0.0) / 3.0));

    // aggregate equals the mean of rows
    double oqs_sum = 0, soft_sum = 0;
    for (const auto& row : report.rows) {
        oqs_sum += row.oqs.value;
        soft_sum += row.ex_soft.value;
    }
    CHECK(std::abs(report.aggregates.oqs.value - oqs_sum / 3.0) < 1e-9);
    CHECK(std::abs(report.aggregates.ex_soft.value - soft_sum / 3.0) < 1e-9);

    std::string tsv = report_tsv(report);
    CHECK(tsv.find("id\tchrf\tkvs\ttrees\toqs\tem\tstatus\tex\tex_soft") == 0);
    CHECK(tsv.find("syntax_error") != std::string::npos);
    std::string table = report_table(report);
    CHECK(table.find("#Errors") != std::string::npos);
}

TEST_CASE("run_eval is deterministic under parallel workers") {
    Corpus corpus = grounded_corpus();
    fixture::OverpassServer server;
    populate_grounded_server(server);
    server.start();
    exec::Executor executor(grounded_config(server.url()), nullptr);

    Predictions preds;
    preds.upsert("g1", "node(7);out;");
    preds.upsert("g2", "node(2);out;");
    preds.upsert("g3", "node(5);out;");

    EvalReport serial = run_eval(corpus, Split::Dev, preds, &executor, 1);
    EvalReport parallel = run_eval(corpus, Split::Dev, preds, &executor, 4);
    CHECK(report_tsv(serial) == report_tsv(parallel));
    CHECK(serial.aggregates.ex_soft.value == parallel.aggregates.ex_soft.value);
}

TEST_CASE("run_eval flags missing predictions and scores them as empty") {
    Corpus corpus = grounded_corpus();
    Predictions partial;
    partial.upsert("g1", corpus.find("g1")->query);

    EvalReport report = run_eval(corpus, Split::Dev, partial);
    CHECK(report.aggregates.missing_predictions == 2);
    CHECK(report.aggregates.em_rate == doctest::Approx(1.0 / 3.0));
    for (const auto& row : report.rows) {
        if (row.id != "g1") {
            CHECK(row.prediction_missing);
            CHECK(row.em == false);
            CHECK(row.oqs.value < 0.5);
        }
    }
}

TEST_CASE("self refine") {
    Corpus corpus = grounded_corpus();
    fixture::OverpassServer server;
    populate_grounded_server(server);
    // the broken prediction the mock client will fix
    server.add_syntax_error("node(1);; ->.all;out;",
                            "Error: line 1: parse error: Unknown type \"->\"");
    server.start();
    exec::Executor executor(grounded_config(server.url()), nullptr);

    Predictions baseline;
    baseline.upsert("g1", "node(1);; ->.all;out;");  // syntax error
    baseline.upsert("g2", "node(id:2,3);out;");      // fine
    baseline.upsert("g3", "node(5);out;");           // fine

    ShotStrategy strategy{ShotMode::Random, 1, 7};

    SUBCASE("off mode is the identity") {
        RefinePolicy policy{RefineMode::Off, true, 1};
        auto result = self_refine(corpus, Split::Dev, baseline, policy, nullptr, nullptr,
                                  strategy);
        CHECK(result.predictions.items == baseline.items);
        CHECK(result.records.empty());
    }

    SUBCASE("errors_only repairs exactly the broken instance") {
        // build the exact prompt the harness will build, and script its fix
        auto train = corpus.split_instances(Split::Train);
        std::vector<RefineShot> shots;
        for (const auto* s : select_shots(corpus.find("g1")->nl, train, strategy))
            shots.push_back({s->nl, s->query, s->query});
        std::string prompt = build_refine_prompt(
            corpus.find("g1")->nl, "node(1);; ->.all;out;",
            std::string("Error: line 1: parse error: Unknown type \"->\""), shots);

        auto map_path = std::filesystem::temp_directory_path() / "ovql_refine_map.jsonl";
        {
            std::ofstream out(map_path);
            ordered_json rec;
            rec["prompt_sha256"] = text::sha256_hex(prompt);
            rec["completion"] = "node(1);out;";
            out << rec.dump() << '\n';
        }
        FixtureGenerationClient client(map_path);
        RefinePolicy policy{RefineMode::ErrorsOnly, true, 1};
        auto result =
            self_refine(corpus, Split::Dev, baseline, policy, &client, &executor, strategy);

        REQUIRE(result.records.size() == 1);
        CHECK(result.records[0].id == "g1");
        CHECK(result.records[0].refined);
        CHECK(result.predictions.find("g1")->query == "node(1);out;");
        // untouched instances stay byte-identical
        CHECK(result.predictions.find("g2")->query == baseline.find("g2")->query);
        CHECK(result.predictions.find("g3")->query == baseline.find("g3")->query);
        // the refined query now executes cleanly and hits the reference
        auto outcome = executor.execute(result.predictions.find("g1")->query);
        CHECK(outcome.ok());
        auto ref_outcome = executor.execute(corpus.find("g1")->query);
        CHECK(metrics::ex(outcome.elements, ref_outcome.elements));
        std::filesystem::remove(map_path);
    }

    SUBCASE("errors_only with a clean baseline changes nothing") {
        Predictions clean;
        clean.upsert("g1", "node(1);out;");
        clean.upsert("g2", "node(id:2,3);out;");
        clean.upsert("g3", "node(5);out;");
        auto map_path = std::filesystem::temp_directory_path() / "ovql_refine_empty.jsonl";
        std::ofstream(map_path).close();
        FixtureGenerationClient client(map_path);
        RefinePolicy policy{RefineMode::ErrorsOnly, true, 1};
        auto result =
            self_refine(corpus, Split::Dev, clean, policy, &client, &executor, strategy);
        CHECK(result.predictions.items == clean.items);
        CHECK(result.records.empty());
        std::filesystem::remove(map_path);
    }

    SUBCASE("client failure keeps the baseline and flags the record") {
        auto map_path = std::filesystem::temp_directory_path() / "ovql_refine_none.jsonl";
        std::ofstream(map_path).close();
        FixtureGenerationClient client(map_path);  // knows no prompts
        RefinePolicy policy{RefineMode::ErrorsOnly, true, 1};
        auto result =
            self_refine(corpus, Split::Dev, baseline, policy, &client, &executor, strategy);
        REQUIRE(result.records.size() == 1);
        CHECK(result.records[0].client_failed);
        CHECK(result.predictions.items == baseline.items);
        std::filesystem::remove(map_path);
    }
}
