#include <catch2/catch_amalgamated.hpp>

#include "coapicn/coap/link_format.hpp"
#include "coapicn/digest.hpp"
#include "coapicn/icn/name.hpp"
#include "coapicn/sim/log.hpp"
#include "coapicn/sim/scheduler.hpp"

using namespace coapicn;

TEST_CASE("sha256 matches the published test values") {
  // FIPS 180-2 example digests.
  CHECK(icn::hex(sha256(std::string_view(""))) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(icn::hex(sha256(std::string_view("abc"))) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(icn::hex(sha256(std::string_view(
            "abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq"))) ==
        "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST_CASE("scope segments are digest prefixes") {
  auto seg = icn::scopeSegment("coap");
  auto full = sha256(std::string_view("coap"));
  CHECK(std::equal(seg.begin(), seg.end(), full.begin()));
  CHECK(icn::scopeSegment("coap") == icn::scopeSegment("coap"));
  CHECK(icn::scopeSegment("coap") != icn::scopeSegment("coap-ctl"));
}

TEST_CASE("named object ids order and render") {
  icn::NamedObjectId a{{icn::scopeSegment("coap"), icn::scopeSegment("x")},
                       icn::rid(toBytes("1"))};
  icn::NamedObjectId b = a;
  CHECK(a == b);
  b.rid = icn::rid(toBytes("2"));
  CHECK(a != b);
  CHECK((a < b || b < a));

  auto s = a.str();
  // two 8-byte scope segments in hex, '#', 8-byte rid prefix
  auto hashPos = s.find('#');
  REQUIRE(hashPos != std::string::npos);
  CHECK(hashPos == 16 + 1 + 16);
  CHECK(s.size() == hashPos + 1 + 16);
}

TEST_CASE("link format round trips") {
  std::vector<coap::ResourceLink> links{
      {{"sensors", "temp"}, {{"rt", "temperature-c"}, {"obs", ""}}},
      {{"state"}, {{"title", "Door state"}}},
  };
  auto text = serializeLinkFormat(links);
  CHECK(text ==
        "</sensors/temp>;obs=\"\";rt=temperature-c,"
        "</state>;title=\"Door state\"");
  CHECK(coap::parseLinkFormat(text) == links);
}

TEST_CASE("link format parses external forms") {
  auto links = coap::parseLinkFormat(
      "</sensors/temp>;rt=\"temperature\";obs, </big>;sz=1024");
  REQUIRE(links.size() == 2);
  CHECK(links[0].uri_path == std::vector<std::string>{"sensors", "temp"});
  CHECK(links[0].attributes.at("rt") == "temperature");
  CHECK(links[0].attributes.count("obs") == 1);  // bare flag, empty value
  CHECK(links[0].attributes.at("obs").empty());
  CHECK(links[1].uri_path == std::vector<std::string>{"big"});
  CHECK(links[1].attributes.at("sz") == "1024");
}

TEST_CASE("link format rejects garbage") {
  CHECK_THROWS_AS(coap::parseLinkFormat("sensors"), coap::LinkFormatError);
  CHECK_THROWS_AS(coap::parseLinkFormat("<sensors>"), coap::LinkFormatError);
  CHECK_THROWS_AS(coap::parseLinkFormat("</a>;=x"), coap::LinkFormatError);
  CHECK_THROWS_AS(coap::parseLinkFormat("</a>;rt=\"x"), coap::LinkFormatError);
  CHECK_THROWS_AS(coap::parseLinkFormat("</a>;rt=1;rt=2"),
                  coap::LinkFormatError);
  CHECK_THROWS_AS(coap::parseLinkFormat("</a> </b>"), coap::LinkFormatError);
}

TEST_CASE("scheduler runs events in time order, FIFO within a tick") {
  sim::EventScheduler sched;
  std::vector<int> order;
  sched.schedule(5, [&] { order.push_back(3); });
  sched.schedule(1, [&] { order.push_back(1); });
  sched.schedule(5, [&] { order.push_back(4); });  // same tick, later seq
  sched.schedule(2, [&] {
    order.push_back(2);
    sched.schedule(0, [&] { order.push_back(20); });  // same-tick append
  });
  sched.runAll();
  CHECK(order == std::vector<int>{1, 2, 20, 3, 4});
  CHECK(sched.now() == 5);
  CHECK(sched.empty());
}

TEST_CASE("scheduler rejects scheduling into the past") {
  sim::EventScheduler sched;
  sched.schedule(10, [&] {});
  sched.runAll();
  CHECK_THROWS_AS(sched.scheduleAt(5, [] {}), Error);
}

TEST_CASE("scheduler event budget stops runaway loops") {
  sim::EventScheduler sched;
  std::function<void()> loop = [&] { sched.schedule(1, loop); };
  sched.schedule(1, loop);
  CHECK_THROWS_AS(sched.runAll(100), Error);
}

TEST_CASE("event log records pipe-delimited lines") {
  sim::EventLog log;
  log.header("demo", "icn", 7);
  log.record(3, "napA", "suppress", "obj#1234", "token=aa");
  log.record(4, "napA", "suppress", "obj#1234", "");
  log.record(4, "napB", "tree_rx", "", "edges=2");

  auto text = log.str();
  CHECK(text.find("demo") != std::string::npos);
  CHECK(text.find("3 | napA | suppress | obj#1234 | token=aa\n") !=
        std::string::npos);
  CHECK(text.find("4 | napB | tree_rx | - | edges=2\n") != std::string::npos);

  CHECK(log.countKind("suppress") == 2);
  CHECK(log.countKind("tree_rx") == 1);
  CHECK(log.countKind("nothing") == 0);
  CHECK(log.grep("napA").size() == 2);
}
