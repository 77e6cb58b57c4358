#include <doctest.h>
#include <httplib.h>

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <thread>

namespace {

struct Output {
    std::string text;
    int status = -1;
};

Output run(const std::string& args) {
    const std::string cmd = std::string(COLDSTART_CLI) + " " + args + " 2>/dev/null";
    Output out;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.text.append(buf, got);
    const int raw = pclose(pipe);
    out.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return out;
}

std::size_t count_lines(const std::string& s) {
    std::size_t n = 0;
    for (char c : s) n += c == '\n' ? 1 : 0;
    return n;
}

}  // namespace

TEST_CASE("cli runs an experiment to csv") {
    const Output out = run("--dataset sbm --model gcn --sampler random --rounds 2 --repeats 3 --max-epochs 20");
    CHECK(out.status == 0);
    CHECK(count_lines(out.text) == 1 + 3 * 3);
    CHECK(out.text.rfind("run_id,seed,setting", 0) == 0);
    CHECK(run("--dataset sbm --model gcn --sampler random --rounds 2 --repeats 3 --max-epochs 20").text == out.text);
}

TEST_CASE("cli rejects bad arguments") {
    CHECK(run("--sampler best").status == 2);
    CHECK(run("--epsilon 3").status == 2);
    CHECK(run("--dataset nowhere").status == 2);
    CHECK(run("--annotator interactive").status == 2);
}

TEST_CASE("cli serves the annotation api") {
    const int port = 18000 + static_cast<int>(std::chrono::steady_clock::now().time_since_epoch().count() % 2000);
    const std::string cmd = std::string(COLDSTART_CLI) + " --serve --host 127.0.0.1 --port " + std::to_string(port) +
                            " 2>/dev/null & echo $!";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char pid[32] = {0};
    REQUIRE(std::fgets(pid, sizeof pid, pipe) != nullptr);
    pclose(pipe);

    httplib::Client client("127.0.0.1", port);
    httplib::Result res;
    for (int attempt = 0; attempt < 50 && !res; ++attempt) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
        res = client.Get("/state");
    }
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->body.find("\"idle\"") != std::string::npos);
    CHECK(std::system((std::string("kill ") + pid).c_str()) == 0);
}
