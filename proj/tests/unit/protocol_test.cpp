#include "frh/backend.hpp"
#include "frh/errors.hpp"
#include "frh/protocol.hpp"
#include "frh/tensor_io.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <sstream>
#include <thread>

using namespace frh;
using nlohmann::json;

namespace {

json ask(Backend& b, const std::string& line) { return json::parse(handle_request(b, line)); }

std::string cli_serve_command(const std::string& toy_spec) {
  return std::string(FRH_CLI_PATH) + " serve --backend " + toy_spec;
}

}  // namespace

TEST(HandleRequest, Meta) {
  ToyBackend toy(1, 8, 30);
  const json r = ask(toy, R"({"op":"meta"})");
  EXPECT_EQ(r["ok"], true);
  EXPECT_EQ(r["d"], 8);
  EXPECT_EQ(r["vocab"], 30);
  EXPECT_EQ(r["bos"], 0);
  EXPECT_TRUE(r["eos"].is_null());
  EXPECT_EQ(r["causal"], true);
}

TEST(HandleRequest, TokenizeFeaturesTopk) {
  ToyBackend toy(2, 6, 40);
  json r = ask(toy, R"({"op":"tokenize","text":"bab"})");
  ASSERT_EQ(r["ok"], true);
  EXPECT_EQ(r["tokens"].get<TokenIds>(), toy.tokenize("bab"));

  r = ask(toy, R"({"op":"features","tokens":[0,3,5]})");
  ASSERT_EQ(r["ok"], true);
  const Matrix local = toy.features(TokenIds{0, 3, 5});
  ASSERT_EQ(r["hidden"].size(), 3u);
  for (std::size_t t = 0; t < 3; ++t) {
    ASSERT_EQ(r["hidden"][t].size(), 6u);
    for (std::size_t i = 0; i < 6; ++i) {
      EXPECT_EQ(r["hidden"][t][i].get<double>(), local(static_cast<Index>(i), static_cast<Index>(t)));
    }
  }

  r = ask(toy, R"({"op":"topk","tokens":[0,3],"k":4})");
  ASSERT_EQ(r["ok"], true);
  const auto local_top = toy.top_k(TokenIds{0, 3}, 4);
  ASSERT_EQ(r["cands"].size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(r["cands"][i]["t"], local_top[i].token);
    EXPECT_EQ(r["cands"][i]["l"].get<double>(), local_top[i].logit);
  }
}

TEST(HandleRequest, ErrorsKeepTheSessionUsable) {
  ToyBackend toy(3, 6, 40);
  for (const char* bad : {"not json", R"({"op":"fly"})", R"([1,2])", R"({"op":"topk","tokens":[0],"k":41})",
                          R"({"op":"features","tokens":[]})", R"({"op":"features","tokens":[99]})",
                          R"({"op":"features","tokens":"abc"})", R"({"op":"tokenize","text":"A"})"}) {
    const json r = ask(toy, bad);
    EXPECT_EQ(r["ok"], false) << bad;
    EXPECT_TRUE(r["err"].is_string()) << bad;
  }
  EXPECT_EQ(ask(toy, R"({"op":"meta"})")["ok"], true);
}

TEST(ServeStream, OneReplyPerRequestInOrder) {
  ToyBackend toy(4, 6, 40);
  std::istringstream in("{\"op\":\"meta\"}\n\n{\"op\":\"bogus\"}\r\n{\"op\":\"tokenize\",\"text\":\"a\"}\n");
  std::ostringstream out;
  serve_stream(toy, in, out);
  std::istringstream lines(out.str());
  std::string line;
  std::vector<json> replies;
  while (std::getline(lines, line)) replies.push_back(json::parse(line));
  ASSERT_EQ(replies.size(), 3u);
  EXPECT_EQ(replies[0]["d"], 6);
  EXPECT_EQ(replies[1]["ok"], false);
  EXPECT_EQ(replies[2]["tokens"], json::array({1}));
}

TEST(RemoteBackend, TcpRoundTripMatchesLocal) {
  ToyBackend toy(5, 12, 80);
  TcpServer server(toy);
  server.start();
  auto remote = open_backend("tcp:127.0.0.1:" + std::to_string(server.port()));
  const BackendMeta m = remote->meta();
  EXPECT_EQ(m.d, 12);
  EXPECT_EQ(m.vocab_size, 80);
  EXPECT_EQ(m.bos, 0);
  EXPECT_TRUE(m.causal);

  const TokenIds x = {0, 7, 33, 2};
  const Matrix local = toy.features(x);
  const Matrix got = remote->features(x);
  EXPECT_LE((got - local).cwiseAbs().maxCoeff(), 1e-5);
  EXPECT_EQ(got, to_float_precision(local));
  EXPECT_EQ(remote->top_k(x, 5), toy.top_k(x, 5));
  EXPECT_EQ(remote->tokenize("baba"), toy.tokenize("baba"));

  try {
    remote->top_k(x, 81);
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_NE(std::string(e.what()).find("backend error"), std::string::npos);
  }
  EXPECT_EQ(remote->top_k(x, 1).size(), 1u);
  server.stop();
}

TEST(RemoteBackend, ConcurrentSessions) {
  ToyBackend toy(6, 8, 50);
  TcpServer server(toy);
  server.start();
  const std::string spec = "tcp:127.0.0.1:" + std::to_string(server.port());
  std::vector<std::thread> clients;
  std::vector<int> ok(4, 0);
  for (int c = 0; c < 4; ++c) {
    clients.emplace_back([&, c] {
      auto remote = open_backend(spec);
      for (int i = 0; i < 20; ++i) {
        const TokenIds x = {0, static_cast<TokenId>(c + 1), static_cast<TokenId>(i + 1)};
        if (remote->features(x) == to_float_precision(toy.features(x))) ++ok[static_cast<std::size_t>(c)];
      }
    });
  }
  for (auto& t : clients) t.join();
  for (int n : ok) EXPECT_EQ(n, 20);
  server.stop();
}

TEST(RemoteBackend, ExecTransportAgainstCliServe) {
  ToyBackend toy(7, 8, 40);
  auto remote = open_backend("exec:" + cli_serve_command("toy:7:8:40"));
  EXPECT_EQ(remote->meta().d, 8);
  const TokenIds x = {0, 1, 2};
  EXPECT_EQ(remote->features(x), to_float_precision(toy.features(x)));
  EXPECT_EQ(remote->top_k(x, 3), toy.top_k(x, 3));
  EXPECT_THROW(remote->features(TokenIds{45}), BackendError);
  EXPECT_EQ(remote->meta().vocab_size, 40);
}

TEST(RemoteBackend, ProtocolViolations) {
  EXPECT_THROW(open_backend(R"(exec:echo not-json)")->meta(), BackendError);
  EXPECT_THROW(open_backend(R"(exec:echo '{"ok":true}')")->meta(), BackendError);
  EXPECT_THROW(open_backend(R"(exec:echo '{"ok":true,"d":"8","vocab":40}')")->meta(), BackendError);
  EXPECT_THROW(open_backend(R"(exec:echo '{"ok":"yes"}')")->meta(), BackendError);
  EXPECT_THROW(open_backend("exec:true")->meta(), BackendError);
  try {
    open_backend(R"(exec:echo '{"ok":false,"err":"model offline"}')")->meta();
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_NE(std::string(e.what()).find("model offline"), std::string::npos);
  }
}

TEST(RemoteBackend, RejectsUnsortedOrShortCandidateLists) {
  const std::string meta = R"({"ok":true,"d":4,"vocab":10,"bos":0,"causal":true})";
  auto scripted = [&](const std::string& reply) {
    return open_backend("exec:printf '%s\\n%s\\n' '" + meta + "' '" + reply + "'; cat >/dev/null");
  };
  {
    auto b = scripted(R"({"ok":true,"cands":[{"t":1,"l":0.5},{"t":2,"l":0.9}]})");
    EXPECT_EQ(b->meta().d, 4);
    EXPECT_THROW(b->top_k(TokenIds{0}, 2), BackendError);
  }
  {
    auto b = scripted(R"({"ok":true,"cands":[{"t":1,"l":0.5}]})");
    b->meta();
    EXPECT_THROW(b->top_k(TokenIds{0}, 2), BackendError);
  }
  {
    auto b = scripted(R"({"ok":true,"hidden":[[1,2,3]]})");
    b->meta();
    EXPECT_THROW(b->features(TokenIds{0}), BackendError);
  }
}
