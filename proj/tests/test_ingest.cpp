#include <doctest.h>

#include <algorithm>

#include "itd/ingest.hpp"
#include "itd/rng.hpp"
#include "test_util.hpp"

using namespace itd;

TEST_CASE("logon rows map directly to event records") {
    TempDir dir("ingest_logon");
    write_text(dir.path / "logon.csv",
               "id,date,user,pc,activity\n"
               "{X1},01/02/2010 07:55:00,AAA0001,PC-1234,Logon\n"
               "{X2},01/02/2010 17:01:30,AAA0001,PC-1234,Logoff\n");
    const auto events = parse_log_file(dir.path / "logon.csv", LogKind::logon);
    REQUIRE(events.size() == 2);
    CHECK(events[0].kind == EventKind::logon);
    CHECK(events[0].user == "AAA0001");
    CHECK(events[0].pc == "PC-1234");
    CHECK(events[0].when == Timestamp{{2010, 1, 2}, {7, 55, 0}});
    CHECK(events[0].id == "{X1}");
    CHECK(events[1].kind == EventKind::logoff);
}

TEST_CASE("header-only file yields an empty stream with zero errors") {
    TempDir dir("ingest_empty");
    write_text(dir.path / "http.csv", "id,date,user,pc,url,content\n");
    ParseStats stats;
    const auto events = parse_log_file(dir.path / "http.csv", LogKind::http, RowPolicy::fail, &stats);
    CHECK(events.empty());
    CHECK(stats.rows == 0);
    CHECK(stats.malformed == 0);
    CHECK(stats.unknown_activity == 0);
}

TEST_CASE("email payload fields parse, including quoted and empty lists") {
    TempDir dir("ingest_email");
    write_text(dir.path / "email.csv",
               "id,date,user,pc,to,cc,bcc,from,size,attachments,content\n"
               "{E1},01/02/2010 09:00:00,AAA0001,PC-1,a@ext.com;b@dtaa.com,,c@dtaa.com,"
               "AAA0001@dtaa.com,1000,1,\"hello, world\"\n");
    const auto events = parse_log_file(dir.path / "email.csv", LogKind::email);
    REQUIRE(events.size() == 1);
    const auto& mail = std::get<EmailPayload>(events[0].payload);
    CHECK(mail.to == std::vector<std::string>{"a@ext.com", "b@dtaa.com"});
    CHECK(mail.cc.empty());
    CHECK(mail.bcc == std::vector<std::string>{"c@dtaa.com"});
    CHECK(mail.from == "AAA0001@dtaa.com");
    CHECK(mail.size_bytes == 1000);
    CHECK(mail.attachments == 1);
}

TEST_CASE("device, file and http rows parse into their payloads") {
    TempDir dir("ingest_kinds");
    write_text(dir.path / "device.csv",
               "id,date,user,pc,activity\n"
               "{D1},01/02/2010 12:00:00,U1,PC-1,Connect\n"
               "{D2},01/02/2010 12:30:00,U1,PC-1,Disconnect\n");
    write_text(dir.path / "file.csv",
               "id,date,user,pc,filename,content\n"
               "{F1},01/02/2010 10:00:00,U1,PC-1,report.doc,stuff\n");
    write_text(dir.path / "http.csv",
               "id,date,user,pc,url,content\n"
               "{H1},01/02/2010 11:00:00,U1,PC-1,http://www.example.com/page,words\n");

    const auto device = parse_log_file(dir.path / "device.csv", LogKind::device);
    REQUIRE(device.size() == 2);
    CHECK(device[0].kind == EventKind::device_connect);
    CHECK(device[1].kind == EventKind::device_disconnect);

    const auto files = parse_log_file(dir.path / "file.csv", LogKind::file);
    REQUIRE(files.size() == 1);
    CHECK(std::get<FilePayload>(files[0].payload).filename == "report.doc");

    const auto http = parse_log_file(dir.path / "http.csv", LogKind::http);
    REQUIRE(http.size() == 1);
    CHECK(std::get<HttpPayload>(http[0].payload).url == "http://www.example.com/page");
}

TEST_CASE("malformed rows abort under fail policy and count under skip") {
    TempDir dir("ingest_bad");
    const char* text =
        "id,date,user,pc,activity\n"
        "{X1},01/02/2010 07:55:00,U1,PC-1,Logon\n"
        "{X2},01/02/2010 07:55:00,U1,PC-1\n"                  // missing column
        "{X3},bogus,U1,PC-1,Logon\n"                           // bad timestamp
        "{X4},01/02/2010 08:00:00,,PC-1,Logon\n"               // empty user
        "{X5},01/02/2010 08:00:00,U1,PC-1,Explode\n"           // unknown activity
        "{X6},01/02/2010 09:00:00,U1,PC-1,Logoff\n";
    write_text(dir.path / "logon.csv", text);

    CHECK_THROWS_AS(parse_log_file(dir.path / "logon.csv", LogKind::logon), MalformedRow);

    ParseStats stats;
    const auto events =
        parse_log_file(dir.path / "logon.csv", LogKind::logon, RowPolicy::skip, &stats);
    CHECK(events.size() == 2);
    CHECK(stats.rows == 2);
    CHECK(stats.malformed == 3);
    CHECK(stats.unknown_activity == 1);

    // the unknown activity row alone also aborts under fail policy
    write_text(dir.path / "only_activity.csv",
               "id,date,user,pc,activity\n{X1},01/02/2010 08:00:00,U1,PC-1,Explode\n");
    CHECK_THROWS_AS(parse_log_file(dir.path / "only_activity.csv", LogKind::logon),
                    UnknownActivity);
}

TEST_CASE("malformed row errors carry the line number") {
    TempDir dir("ingest_line");
    write_text(dir.path / "logon.csv",
               "id,date,user,pc,activity\n"
               "{X1},01/02/2010 07:55:00,U1,PC-1,Logon\n"
               "{X2},nope,U1,PC-1,Logon\n");
    try {
        parse_log_file(dir.path / "logon.csv", LogKind::logon);
        FAIL("expected MalformedRow");
    } catch (const MalformedRow& e) {
        CHECK(e.line == 3);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("missing file raises IoError") {
    CHECK_THROWS_AS(parse_log_file("/nonexistent/logon.csv", LogKind::logon), IoError);
}

TEST_CASE("ground truth collects distinct user-day pairs") {
    TempDir dir("truth");
    write_text(dir.path / "truth.csv",
               "user,date\n"
               "AAA,05/01/2010 08:00:00\n"
               "AAA,05/01/2010 10:00:00\n"
               "AAA,05/01/2010 23:00:00\n"
               "BBB,05/02/2010 01:00:00\n");
    const GroundTruth truth = load_ground_truth(dir.path / "truth.csv");
    CHECK(truth.size() == 2);
    CHECK(truth.is_malicious("AAA", Date{2010, 5, 1}));
    CHECK(truth.is_malicious("BBB", Date{2010, 5, 2}));
    CHECK(!truth.is_malicious("AAA", Date{2010, 5, 2}));
    CHECK(!truth.is_malicious("CCC", Date{2010, 5, 1}));
}

TEST_CASE("ground truth accepts bare dates and empty files") {
    TempDir dir("truth2");
    write_text(dir.path / "bare.csv", "user,date\nAAA,05/01/2010\n");
    const GroundTruth bare = load_ground_truth(dir.path / "bare.csv");
    CHECK(bare.size() == 1);
    CHECK(bare.is_malicious("AAA", Date{2010, 5, 1}));

    write_text(dir.path / "empty.csv", "");
    CHECK(load_ground_truth(dir.path / "empty.csv").empty());

    write_text(dir.path / "headerless.csv", "AAA,05/01/2010 08:00:00\n");
    CHECK(load_ground_truth(dir.path / "headerless.csv").size() == 1);
}

namespace {

EventRecord make_event(const char* id, Timestamp when, const char* user, const char* pc) {
    EventRecord ev;
    ev.id = id;
    ev.when = when;
    ev.user = user;
    ev.pc = pc;
    ev.kind = EventKind::logon;
    return ev;
}

}  // namespace

TEST_CASE("grouping splits by user and day") {
    std::vector<EventRecord> events;
    events.push_back(make_event("a", {{2010, 1, 2}, {9, 0, 0}}, "U1", "PC-1"));
    events.push_back(make_event("b", {{2010, 1, 2}, {10, 0, 0}}, "U1", "PC-1"));
    events.push_back(make_event("c", {{2010, 1, 3}, {9, 0, 0}}, "U1", "PC-1"));

    const auto groups = group_by_user_day(std::move(events));
    REQUIRE(groups.size() == 2);
    CHECK(groups.at({"U1", {2010, 1, 2}}).size() == 2);
    CHECK(groups.at({"U1", {2010, 1, 3}}).size() == 1);
}

TEST_CASE("groups are time-sorted even for out-of-order input") {
    std::vector<EventRecord> events;
    events.push_back(make_event("b", {{2010, 1, 2}, {15, 0, 0}}, "U1", "PC-1"));
    events.push_back(make_event("c", {{2010, 1, 2}, {9, 0, 0}}, "U1", "PC-1"));
    events.push_back(make_event("a", {{2010, 1, 2}, {9, 0, 0}}, "U1", "PC-1"));

    const auto groups = group_by_user_day(std::move(events));
    const auto& day = groups.at({"U1", {2010, 1, 2}});
    REQUIRE(day.size() == 3);
    CHECK(day[0].id == "a");  // same time, id breaks the tie
    CHECK(day[1].id == "c");
    CHECK(day[2].id == "b");
}

TEST_CASE("grouping conserves events and keys match members") {
    Rng rng(7);
    std::vector<EventRecord> events;
    const char* users[] = {"U1", "U2", "U3"};
    for (int i = 0; i < 500; ++i) {
        const Date date = Date{2010, 1, 1}.plus_days(static_cast<int>(rng.below(10)));
        events.push_back(make_event(("e" + std::to_string(i)).c_str(),
                                    {date, {static_cast<int>(rng.below(24)), 0, 0}},
                                    users[rng.below(3)], "PC-1"));
    }
    const auto groups = group_by_user_day(std::move(events));

    std::size_t total = 0;
    for (const auto& [key, members] : groups) {
        CHECK(!members.empty());
        for (const auto& ev : members) {
            CHECK(ev.user == key.user);
            CHECK(ev.when.date == key.date);
        }
        CHECK(std::is_sorted(members.begin(), members.end(),
                             [](const EventRecord& a, const EventRecord& b) {
                                 if (a.when != b.when) return a.when < b.when;
                                 return a.id < b.id;
                             }));
        total += members.size();
    }
    CHECK(total == 500);
}

TEST_CASE("determinism: parsing the same bytes twice gives identical streams") {
    TempDir dir("ingest_det");
    write_text(dir.path / "logon.csv",
               "id,date,user,pc,activity\n"
               "{X1},01/02/2010 07:55:00,U1,PC-1,Logon\n"
               "{X2},01/02/2010 08:55:00,U2,PC-2,Logoff\n");
    const auto a = parse_log_file(dir.path / "logon.csv", LogKind::logon);
    const auto b = parse_log_file(dir.path / "logon.csv", LogKind::logon);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].id == b[i].id);
        CHECK(a[i].when == b[i].when);
        CHECK(a[i].user == b[i].user);
    }
}

TEST_CASE("corpus ingest merges the five files") {
    TempDir dir("corpus");
    write_text(dir.path / "logon.csv",
               "id,date,user,pc,activity\n"
               "{L1},01/04/2010 08:00:00,U1,PC-1,Logon\n"
               "{L2},01/04/2010 17:00:00,U1,PC-1,Logoff\n");
    write_text(dir.path / "device.csv",
               "id,date,user,pc,activity\n{D1},01/04/2010 12:00:00,U1,PC-1,Connect\n");
    write_text(dir.path / "file.csv",
               "id,date,user,pc,filename,content\n{F1},01/04/2010 13:00:00,U2,PC-2,a.doc,\n");
    write_text(dir.path / "email.csv", "id,date,user,pc,to,cc,bcc,from,size,attachments,content\n");
    write_text(dir.path / "http.csv",
               "id,date,user,pc,url,content\n{H1},01/04/2010 14:00:00,U1,PC-1,http://x.com/,\n");

    const IngestResult result = ingest_corpus(CorpusPaths::in_directory(dir.path));
    CHECK(result.total_events == 5);
    CHECK(result.per_file[0].rows == 2);
    CHECK(result.per_file[1].rows == 1);
    CHECK(result.per_file[2].rows == 1);
    CHECK(result.per_file[3].rows == 0);
    CHECK(result.per_file[4].rows == 1);
    REQUIRE(result.groups.size() == 2);
    CHECK(result.groups.at({"U1", {2010, 1, 4}}).size() == 4);
    CHECK(result.groups.at({"U2", {2010, 1, 4}}).size() == 1);
}
