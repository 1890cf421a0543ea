//! Seeded generator of clean schema-guided dialogues over a small
//! multi-domain tool pool (buses, flights, trains, restaurants, events,
//! hotels, houses).
//!
//! Every dialogue follows a search → browse → (book) flow with one tool call
//! per tool turn, so it validates against [`default_pool`] and contains both
//! result shapes: row lists for searches and single records for actions.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dialogue::{AssistantAction, Dialogue, ResultRow, SchemaPool, ToolArgSpec, ToolCall, ToolResult, ToolSchema};

fn counts(n: usize) -> Vec<String> {
    (1..=n).map(|i| i.to_string()).collect()
}

fn schema(name: &str, description: &str, domain: &str, is_action: bool, required: Vec<ToolArgSpec>, optional: Vec<ToolArgSpec>) -> ToolSchema {
    ToolSchema {
        name: name.into(),
        description: description.into(),
        required,
        optional,
        is_action,
        domain: Some(domain.into()),
    }
}

fn free(name: &str, description: &str) -> ToolArgSpec {
    ToolArgSpec::free(name, description)
}

fn cat<S: Into<String>>(name: &str, description: &str, values: impl IntoIterator<Item = S>) -> ToolArgSpec {
    ToolArgSpec::categorical(name, description, values)
}

/// The tool pool used by [`generate`]. `FindBus` and `BuyBusTicket` match
/// the bus tools of the reference demonstration dialogue exactly.
pub fn default_pool() -> SchemaPool {
    let from = || free("from_location", "City where bus is leaving from");
    let to = || free("to_location", "City where bus is going to");
    let bus_date = || free("leaving_date", "Date of bus leaving for journey");
    let bus_travelers = || cat("travelers", "Number of travelers for journey", counts(5));
    let bool_values = ["True", "False"];
    [
        schema("FindBus", "Find a bus journey for a given pair of cities", "travel", false, vec![from(), to(), bus_date()], vec![bus_travelers()]),
        schema(
            "BuyBusTicket",
            "Buy tickets for a bus journey",
            "travel",
            true,
            vec![from(), to(), bus_date(), free("leaving_time", "Time of bus leaving for journey"), bus_travelers()],
            vec![],
        ),
        schema(
            "FindFlights",
            "Find one-way flights between two cities",
            "travel",
            false,
            vec![
                free("from_location", "City the flight departs from"),
                free("to_location", "City the flight arrives in"),
                free("leaving_date", "Date of the flight"),
            ],
            vec![
                cat("travelers", "Number of passengers", counts(5)),
                cat("seating_class", "Cabin class", ["Economy", "Premium Economy", "Business"]),
            ],
        ),
        schema(
            "ReserveOnewayFlight",
            "Reserve a one-way flight",
            "travel",
            true,
            vec![
                free("from_location", "City the flight departs from"),
                free("to_location", "City the flight arrives in"),
                free("leaving_date", "Date of the flight"),
                free("leaving_time", "Departure time of the flight"),
                cat("travelers", "Number of passengers", counts(5)),
            ],
            vec![cat("seating_class", "Cabin class", ["Economy", "Premium Economy", "Business"])],
        ),
        schema(
            "FindTrains",
            "Find trains between two cities on a given date",
            "travel",
            false,
            vec![
                free("from_location", "City the train departs from"),
                free("to_location", "City the train arrives in"),
                free("leaving_date", "Date of the train journey"),
            ],
            vec![cat("travelers", "Number of adult passengers", counts(5))],
        ),
        schema(
            "GetTrainTickets",
            "Buy train tickets for a journey",
            "travel",
            true,
            vec![
                free("from_location", "City the train departs from"),
                free("to_location", "City the train arrives in"),
                free("leaving_date", "Date of the train journey"),
                free("leaving_time", "Departure time of the train"),
                cat("travelers", "Number of adult passengers", counts(5)),
            ],
            vec![cat("trip_protection", "Whether to add trip protection", bool_values)],
        ),
        schema(
            "FindRestaurants",
            "Find restaurants in a city by cuisine",
            "local",
            false,
            vec![free("city", "City where the restaurant is located"), free("cuisine", "Type of food served")],
            vec![
                cat("price_range", "Price range of the restaurant", ["inexpensive", "moderate", "expensive"]),
                cat("has_live_music", "Whether the restaurant has live music", bool_values),
            ],
        ),
        schema(
            "ReserveRestaurant",
            "Reserve a table at a restaurant",
            "local",
            true,
            vec![
                free("restaurant_name", "Name of the restaurant"),
                free("city", "City where the restaurant is located"),
                free("date", "Date of the reservation"),
                free("time", "Time of the reservation"),
            ],
            vec![cat("number_of_seats", "Number of seats to reserve", counts(6))],
        ),
        schema(
            "FindEvents",
            "Find cultural events in a city",
            "local",
            false,
            vec![free("city", "City where the event takes place"), cat("category", "Kind of event", ["Music", "Sports", "Theater"])],
            vec![free("date", "Date of the event")],
        ),
        schema(
            "BuyEventTickets",
            "Buy tickets for an event",
            "local",
            true,
            vec![
                free("event_name", "Name of the event"),
                free("city", "City where the event takes place"),
                free("date", "Date of the event"),
                cat("number_of_tickets", "Number of tickets to buy", counts(6)),
            ],
            vec![],
        ),
        schema(
            "SearchHotel",
            "Find hotels in a location",
            "lodging",
            false,
            vec![
                free("location", "City or area of the hotel"),
                free("check_in_date", "Date of check-in"),
                free("check_out_date", "Date of check-out"),
            ],
            vec![cat("number_of_rooms", "Number of rooms", counts(3)), cat("star_rating", "Minimum star rating", counts(5))],
        ),
        schema(
            "ReserveHotel",
            "Reserve rooms at a hotel",
            "lodging",
            true,
            vec![
                free("hotel_name", "Name of the hotel"),
                free("location", "City or area of the hotel"),
                free("check_in_date", "Date of check-in"),
                free("check_out_date", "Date of check-out"),
            ],
            vec![cat("number_of_rooms", "Number of rooms", counts(3))],
        ),
        schema(
            "SearchHouse",
            "Find houses to rent in a location",
            "lodging",
            false,
            vec![
                free("location", "City where the house is"),
                free("check_in_date", "Date of check-in"),
                free("check_out_date", "Date of check-out"),
            ],
            vec![cat("number_of_adults", "Number of adults staying", counts(6)), cat("has_laundry_service", "Whether the house has laundry service", bool_values)],
        ),
        schema(
            "BookHouse",
            "Book a house to rent",
            "lodging",
            true,
            vec![
                free("address", "Address of the house"),
                free("location", "City where the house is"),
                free("check_in_date", "Date of check-in"),
                free("check_out_date", "Date of check-out"),
            ],
            vec![cat("number_of_adults", "Number of adults staying", counts(6))],
        ),
    ]
    .into_iter()
    .collect()
}

const CITIES: [&str; 12] = [
    "Vancouver", "Seattle", "Portland", "San Francisco", "Los Angeles", "San Diego", "Sacramento", "Fresno", "Las Vegas",
    "Phoenix", "Denver", "Salt Lake City",
];
const CUISINES: [&str; 8] = ["Italian", "Mexican", "Thai", "Indian", "Japanese", "Chinese", "Greek", "Vegetarian"];
const PLACE_WORDS: [&str; 10] = ["Golden", "Blue", "Olive", "Cedar", "Harbor", "Silver", "Maple", "Sunset", "Lotus", "Red"];
const PLACE_NOUNS: [&str; 8] = ["Garden", "Table", "Kitchen", "House", "Bistro", "Grill", "Corner", "Terrace"];
const HOTEL_NOUNS: [&str; 5] = ["Inn", "Suites", "Hotel", "Lodge", "Plaza"];
const STREETS: [&str; 8] = ["Main Street", "Oak Avenue", "Pine Street", "Market Street", "Lake Road", "Hill Drive", "Elm Street", "Park Lane"];
const ARTISTS: [&str; 8] = ["The Lumineers", "Ruby Lane", "Night Owls", "Coastal Kids", "Silver Strings", "Marco Diaz", "June Parade", "Echo Bay"];
const TEAMS: [&str; 6] = ["Sounders", "Timbers", "Giants", "Dodgers", "Padres", "Rockies"];
const PLAYS: [&str; 5] = ["Hamlet", "The Tempest", "Our Town", "Cats", "Rent"];
const AIRLINES: [&str; 5] = ["Alaska Airlines", "Delta Airlines", "United Airlines", "American Airlines", "Southwest Airlines"];

fn ordinal(n: u32) -> String {
    let suffix = match (n % 10, n % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    };
    format!("{n}{suffix}")
}

#[derive(Clone)]
struct Date {
    day: u32,
}

impl Date {
    fn value(&self) -> String {
        format!("2019-03-{:02}", self.day)
    }

    fn phrase<R: Rng>(&self, rng: &mut R) -> String {
        match rng.random_range(0..3) {
            0 => format!("on March {}", ordinal(self.day)),
            1 => format!("on the {} of this month", ordinal(self.day)),
            _ => format!("on the {} of March", ordinal(self.day)),
        }
    }

    fn spoken(&self) -> String {
        format!("March {}", ordinal(self.day))
    }
}

fn time_value(h: u32, m: u32) -> String {
    format!("{h:02}:{m:02}")
}

fn time_spoken(v: &str) -> String {
    let (h, m) = v.split_once(':').expect("HH:MM");
    let h: u32 = h.parse().expect("hour");
    let (h12, half) = match h {
        0 => (12, "am"),
        1..=11 => (h, "am"),
        12 => (12, "pm"),
        _ => (h - 12, "pm"),
    };
    format!("{h12}:{m} {half}")
}

fn random_time<R: Rng>(rng: &mut R, from: u32, to: u32) -> String {
    time_value(rng.random_range(from..=to), [0, 10, 15, 20, 30, 40, 45, 50][rng.random_range(0..8)])
}

fn two_cities<R: Rng>(rng: &mut R) -> (String, String) {
    let picked: Vec<&&str> = CITIES.choose_multiple(rng, 2).collect();
    (picked[0].to_string(), picked[1].to_string())
}

fn place_name<R: Rng>(rng: &mut R, nouns: &[&str]) -> String {
    format!("{} {}", PLACE_WORDS.choose(rng).expect("non-empty"), nouns.choose(rng).expect("non-empty"))
}

/// Builder for one dialogue.
struct Script {
    turns: Vec<(String, AssistantAction)>,
}

impl Script {
    fn say(&mut self, user: impl Into<String>, assistant: impl Into<String>) {
        self.turns.push((user.into(), AssistantAction::response(assistant)));
    }

    fn call(&mut self, user: impl Into<String>, call: ToolCall, result: ToolResult, response: impl Into<String>) {
        self.turns.push((user.into(), AssistantAction::tool(call, result, response)));
    }
}

fn pick<'a, R: Rng>(rng: &mut R, items: &'a [&'a str]) -> &'a str {
    items.choose(rng).expect("non-empty")
}

/// Shared shape of the three point-to-point travel services.
struct TravelKind {
    noun: &'static str,
    search: &'static str,
    action: &'static str,
    travelers_required_in_search: bool,
    intents: &'static [&'static str],
}

const BUS: TravelKind = TravelKind {
    noun: "bus",
    search: "FindBus",
    action: "BuyBusTicket",
    travelers_required_in_search: false,
    intents: &["I need to find a seat on a bus.", "Can you help me find a bus?", "I'm looking for a bus ticket."],
};
const FLIGHT: TravelKind = TravelKind {
    noun: "flight",
    search: "FindFlights",
    action: "ReserveOnewayFlight",
    travelers_required_in_search: false,
    intents: &["I need a one-way flight.", "Can you find me a flight?", "I want to fly somewhere next week."],
};
const TRAIN: TravelKind = TravelKind {
    noun: "train",
    search: "FindTrains",
    action: "GetTrainTickets",
    travelers_required_in_search: false,
    intents: &["I'd like to take a train.", "Can you look up trains for me?", "I need train tickets."],
};

fn travel<R: Rng>(rng: &mut R, kind: &TravelKind, book: bool, refine: bool) -> Script {
    let mut s = Script { turns: Vec::new() };
    let (from, to) = two_cities(rng);
    let mut date = Date { day: rng.random_range(1..=28) };
    let travelers: u32 = rng.random_range(1..=4);
    let mention_travelers = rng.random_bool(0.5) || kind.travelers_required_in_search;

    s.say(pick(rng, kind.intents), "Where are you leaving from? Where are you going?");
    if rng.random_bool(0.5) {
        s.say(format!("I am leaving from {from} to go to {to}."), "When are you leaving?");
    } else {
        s.say(format!("I'm leaving from {from}."), "And where are you going?");
        s.say(format!("I want to go to {to}."), "When are you leaving?");
    }
    let mut args = BTreeMap::from([
        ("from_location".to_string(), from.clone()),
        ("to_location".to_string(), to.clone()),
        ("leaving_date".to_string(), date.value()),
    ]);
    let mut user = format!("I am leaving {}.", date.phrase(rng));
    if mention_travelers {
        args.insert("travelers".into(), travelers.to_string());
        user.push_str(&format!(" I need {travelers} ticket{}.", if travelers == 1 { "" } else { "s" }));
    }
    let extra_opt = kind.search == "FindFlights" && rng.random_bool(0.3);
    if extra_opt {
        args.insert("seating_class".into(), "Economy".into());
        user.push_str(" Economy is fine.");
    }
    let mut rows = travel_rows(rng, kind, &args);
    let search = ToolCall { tool: kind.search.into(), args: args.clone() };
    s.call(user, search, ToolResult::Rows(rows.clone()), describe_first(kind, &rows, rows.len()));

    if refine {
        date = Date { day: if date.day < 28 { date.day + 1 } else { date.day - 1 } };
        args.insert("leaving_date".into(), date.value());
        rows = travel_rows(rng, kind, &args);
        let search = ToolCall { tool: kind.search.into(), args: args.clone() };
        let user = format!("Could you check {} instead?", date.phrase(rng));
        s.call(user, search, ToolResult::Rows(rows.clone()), describe_first(kind, &rows, rows.len()));
    }

    let mut chosen = 0;
    let browse = rng.random_range(0..=rows.len().min(3) - 1);
    for i in 1..=browse {
        if rng.random_bool(0.3) && kind.noun != "flight" {
            let r = &rows[chosen];
            s.say(
                "What is the station I am leaving from? What station am I arriving at?",
                format!("You are leaving from {} and arriving at {}.", r["from_station"], r["to_station"]),
            );
        }
        let r = &rows[i];
        s.say(
            pick(rng, &["Anything else available?", "Any other options?", "What else do you have?"]),
            format!("Next, the {} departs at {} and the ticket costs ${}.", kind.noun, time_spoken(&r["leaving_time"]), r["fare"]),
        );
        chosen = i;
    }
    if !book {
        s.say("Thanks, I'll think about it. That's all for now.", "Have a great day!");
        return s;
    }
    let row = &rows[chosen];
    let mut book_args = args.clone();
    book_args.insert("leaving_time".into(), row["leaving_time"].clone());
    let reserve = if args.contains_key("travelers") {
        "That will work, please reserve.".to_string()
    } else {
        book_args.insert("travelers".into(), travelers.to_string());
        format!("That works. Please book it for {travelers} {}.", if travelers == 1 { "person" } else { "people" })
    };
    book_args.retain(|k, _| k != "seating_class" || kind.action == "ReserveOnewayFlight");
    s.say(
        reserve,
        format!(
            "Please confirm, leaving {from} for {to} on {} at {}. {} ticket{} reserved.",
            date.spoken(),
            time_spoken(&row["leaving_time"]),
            book_args["travelers"],
            if book_args["travelers"] == "1" { "" } else { "s" }
        ),
    );
    let mut result = row.clone();
    result.insert("travelers".into(), book_args["travelers"].clone());
    if kind.action == "GetTrainTickets" && rng.random_bool(0.3) {
        book_args.insert("trip_protection".into(), "False".into());
    }
    let done = if kind.noun == "flight" { "Your flight is booked." } else { "Your ticket is confirmed." };
    s.call(
        pick(rng, &["Yes that is correct.", "Yes, please go ahead.", "That's right."]),
        ToolCall { tool: kind.action.into(), args: book_args },
        ToolResult::Single(result),
        done,
    );
    s.say(pick(rng, &["Thank you, that will be all.", "Great, thanks!", "Thanks for your help."]), "Have a great day!");
    s
}

fn travel_rows<R: Rng>(rng: &mut R, kind: &TravelKind, args: &BTreeMap<String, String>) -> Vec<ResultRow> {
    let n = rng.random_range(2..=4);
    let mut times: Vec<String> = (0..n).map(|_| random_time(rng, 6, 21)).collect();
    times.sort();
    times.dedup();
    times
        .into_iter()
        .map(|t| {
            let mut row: ResultRow = args.clone();
            row.insert("leaving_time".into(), t);
            match kind.noun {
                "bus" => {
                    row.insert("fare".into(), rng.random_range(20..=60).to_string());
                    row.insert("from_station".into(), format!("{} Central Station", args["from_location"]));
                    row.insert("to_station".into(), format!("{} Bus Terminal", args["to_location"]));
                    row.insert("transfers".into(), rng.random_range(0..=1).to_string());
                }
                "flight" => {
                    row.insert("fare".into(), rng.random_range(90..=480).to_string());
                    row.insert("airline".into(), pick(rng, &AIRLINES).to_string());
                    row.insert("number_stops".into(), rng.random_range(0..=1).to_string());
                }
                _ => {
                    row.insert("fare".into(), rng.random_range(30..=150).to_string());
                    row.insert("from_station".into(), format!("{} Union Station", args["from_location"]));
                    row.insert("to_station".into(), format!("{} Station", args["to_location"]));
                    row.insert("journey_duration".into(), format!("{}h {}m", rng.random_range(2..=9), rng.random_range(0..=5) * 10));
                }
            }
            row
        })
        .collect()
}

fn describe_first(kind: &TravelKind, rows: &[ResultRow], n: usize) -> String {
    let r = &rows[0];
    let lead = if n == 1 { "I found one option.".to_string() } else { format!("I found {n} options.") };
    match kind.noun {
        "bus" => format!("{lead} First leaves at {} and is ${}. There are {} transfers.", time_spoken(&r["leaving_time"]), r["fare"], r["transfers"]),
        "flight" => format!("{lead} The first is a {} flight at {} for ${}.", r["airline"], time_spoken(&r["leaving_time"]), r["fare"]),
        _ => format!("{lead} The first train leaves at {} and costs ${}.", time_spoken(&r["leaving_time"]), r["fare"]),
    }
}

fn restaurant<R: Rng>(rng: &mut R, book: bool) -> Script {
    let mut s = Script { turns: Vec::new() };
    let city = pick(rng, &CITIES).to_string();
    let cuisine = pick(rng, &CUISINES).to_string();
    s.say(pick(rng, &["I'm looking for a place to eat.", "Can you find me a restaurant?", "I want to go out for dinner."]), "Which city should I search in?");
    s.say(format!("Somewhere in {city}."), "What kind of food would you like?");
    let mut args = BTreeMap::from([("city".to_string(), city.clone()), ("cuisine".to_string(), cuisine.clone())]);
    let mut user = format!("I'd like some {cuisine} food.");
    if rng.random_bool(0.35) {
        let pr = pick(rng, &["inexpensive", "moderate"]);
        args.insert("price_range".into(), pr.into());
        user.push_str(&format!(" Something {pr}, please."));
    }
    let n = rng.random_range(2..=4);
    let rows: Vec<ResultRow> = (0..n)
        .map(|_| {
            let mut row = args.clone();
            row.insert("restaurant_name".into(), place_name(rng, &PLACE_NOUNS));
            row.insert("street_address".into(), format!("{} {}", rng.random_range(10..=999), pick(rng, &STREETS)));
            row.insert("price_range".into(), args.get("price_range").cloned().unwrap_or_else(|| pick(rng, &["inexpensive", "moderate", "expensive"]).into()));
            row.insert("rating".into(), format!("4.{}", rng.random_range(0..=9)));
            row
        })
        .collect();
    let first = &rows[0];
    s.call(
        user,
        ToolCall { tool: "FindRestaurants".into(), args },
        ToolResult::Rows(rows.clone()),
        format!("I found {n} restaurants. {} is a nice {cuisine} place rated {}.", first["restaurant_name"], first["rating"]),
    );
    let mut chosen = 0;
    if rng.random_bool(0.5) {
        chosen = 1;
        s.say("Do you have anything else?", format!("There is also {} at {}.", rows[1]["restaurant_name"], rows[1]["street_address"]));
    }
    if rng.random_bool(0.4) {
        s.say("Where is it located?", format!("It is at {}.", rows[chosen]["street_address"]));
    }
    if !book {
        s.say("Okay, thank you. That's all.", "Enjoy your meal!");
        return s;
    }
    let name = rows[chosen]["restaurant_name"].clone();
    let date = Date { day: rng.random_range(1..=28) };
    let time = random_time(rng, 17, 21);
    let seats: u32 = rng.random_range(1..=6);
    s.say(
        format!("Please book a table there {} at {}.", date.phrase(rng), time_spoken(&time)),
        "How many people will be joining?",
    );
    let mut args = BTreeMap::from([
        ("restaurant_name".to_string(), name.clone()),
        ("city".to_string(), city),
        ("date".to_string(), date.value()),
        ("time".to_string(), time.clone()),
    ]);
    args.insert("number_of_seats".into(), seats.to_string());
    let mut result = args.clone();
    result.insert("phone_number".into(), format!("415-555-{:04}", rng.random_range(0..10000)));
    s.call(
        format!("A table for {seats}, please."),
        ToolCall { tool: "ReserveRestaurant".into(), args },
        ToolResult::Single(result),
        format!("Your table at {name} is reserved for {}.", time_spoken(&time)),
    );
    s.say("Thanks a lot!", "You're welcome, enjoy!");
    s
}

fn event<R: Rng>(rng: &mut R, book: bool) -> Script {
    let mut s = Script { turns: Vec::new() };
    let city = pick(rng, &CITIES).to_string();
    let category = pick(rng, &["Music", "Sports", "Theater"]).to_string();
    s.say(pick(rng, &["Is there anything fun to do?", "I'm looking for an event to attend.", "Can you find me something to do this month?"]), "What kind of event, and in which city?");
    let mut args = BTreeMap::from([("city".to_string(), city.clone()), ("category".to_string(), category.clone())]);
    let noun = match category.as_str() {
        "Music" => "concert",
        "Sports" => "game",
        _ => "play",
    };
    let mut user = format!("I'd like to see a {noun} in {city}.");
    let fixed_date = rng.random_bool(0.3).then(|| Date { day: rng.random_range(1..=28) });
    if let Some(d) = &fixed_date {
        args.insert("date".into(), d.value());
        user.push_str(&format!(" I'm free {}.", d.phrase(rng)));
    }
    let n = rng.random_range(2..=3);
    let rows: Vec<ResultRow> = (0..n)
        .map(|_| {
            let mut row = args.clone();
            let name = match category.as_str() {
                "Music" => pick(rng, &ARTISTS).to_string(),
                "Sports" => {
                    let teams: Vec<&&str> = TEAMS.choose_multiple(rng, 2).collect();
                    format!("{} vs {}", teams[0], teams[1])
                }
                _ => pick(rng, &PLAYS).to_string(),
            };
            row.insert("event_name".into(), name);
            row.insert("date".into(), fixed_date.as_ref().map_or_else(|| Date { day: rng.random_range(1..=28) }.value(), Date::value));
            row.insert("time".into(), random_time(rng, 17, 21));
            row.insert("venue".into(), format!("{} Hall", pick(rng, &PLACE_WORDS)));
            row.insert("price_per_ticket".into(), rng.random_range(25..=120).to_string());
            row
        })
        .collect();
    let first = &rows[0];
    s.call(
        user,
        ToolCall { tool: "FindEvents".into(), args },
        ToolResult::Rows(rows.clone()),
        format!("I found {n} events. {} is at {} on {}.", first["event_name"], first["venue"], first["date"]),
    );
    let mut chosen = 0;
    if rng.random_bool(0.5) {
        chosen = 1;
        s.say("What else is there?", format!("There is also {} at {}.", rows[1]["event_name"], rows[1]["venue"]));
    }
    if !book {
        s.say("Nice, thanks. That's all I needed.", "Have fun!");
        return s;
    }
    let tickets: u32 = rng.random_range(1..=4);
    let row = &rows[chosen];
    s.say(
        format!("I want {tickets} ticket{} for that one.", if tickets == 1 { "" } else { "s" }),
        format!("Please confirm: {tickets} ticket{} for {} on {} in {city}.", if tickets == 1 { "" } else { "s" }, row["event_name"], row["date"]),
    );
    let args = BTreeMap::from([
        ("event_name".to_string(), row["event_name"].clone()),
        ("city".to_string(), city),
        ("date".to_string(), row["date"].clone()),
        ("number_of_tickets".to_string(), tickets.to_string()),
    ]);
    let mut result = args.clone();
    result.insert("venue".into(), row["venue"].clone());
    result.insert("time".into(), row["time"].clone());
    s.call("Yes, please.", ToolCall { tool: "BuyEventTickets".into(), args }, ToolResult::Single(result), "Your tickets have been purchased.");
    s.say("Thank you!", "Enjoy the show!");
    s
}

fn lodging<R: Rng>(rng: &mut R, house: bool, book: bool) -> Script {
    let mut s = Script { turns: Vec::new() };
    let city = pick(rng, &CITIES).to_string();
    let day = rng.random_range(1..=24);
    let check_in = Date { day };
    let check_out = Date { day: day + rng.random_range(1..=4) };
    let (search, action, noun) = if house { ("SearchHouse", "BookHouse", "house") } else { ("SearchHotel", "ReserveHotel", "hotel") };
    s.say(
        if house { pick(rng, &["I need a house to stay in.", "Can you find me a place to rent?"]) } else { pick(rng, &["I need a hotel room.", "Can you find me a hotel?"]) },
        "Where will you be staying?",
    );
    s.say(format!("In {city}."), "What are your check-in and check-out dates?");
    let mut args = BTreeMap::from([
        ("location".to_string(), city.clone()),
        ("check_in_date".to_string(), check_in.value()),
        ("check_out_date".to_string(), check_out.value()),
    ]);
    let mut user = format!("Checking in {} and out on {}.", check_in.phrase(rng), check_out.spoken());
    let count = rng.random_range(1..=3u32);
    let opt = if house { "number_of_adults" } else { "number_of_rooms" };
    if rng.random_bool(0.4) {
        args.insert(opt.into(), count.to_string());
        user.push_str(&format!(" It's for {count} {}.", if house { "adults" } else { "rooms" }));
    }
    let n = rng.random_range(2..=3);
    let rows: Vec<ResultRow> = (0..n)
        .map(|_| {
            let mut row = args.clone();
            if house {
                row.insert("address".into(), format!("{} {}", rng.random_range(10..=999), pick(rng, &STREETS)));
                row.insert("total_price".into(), rng.random_range(150..=900).to_string());
                row.insert("rating".into(), format!("4.{}", rng.random_range(0..=9)));
            } else {
                row.insert("hotel_name".into(), place_name(rng, &HOTEL_NOUNS));
                row.insert("price_per_night".into(), rng.random_range(80..=320).to_string());
                row.insert("star_rating".into(), rng.random_range(2..=5).to_string());
            }
            row
        })
        .collect();
    let key = if house { "address" } else { "hotel_name" };
    let price = if house { "total_price" } else { "price_per_night" };
    s.call(
        user,
        ToolCall { tool: search.into(), args: args.clone() },
        ToolResult::Rows(rows.clone()),
        format!("I found {n} options. The first {noun} is {} at ${}.", rows[0][key], rows[0][price]),
    );
    let mut chosen = 0;
    if rng.random_bool(0.5) {
        chosen = 1;
        s.say("Are there others?", format!("Another one is {} at ${}.", rows[1][key], rows[1][price]));
    }
    if !book {
        s.say("Thank you, that's all for now.", "Have a nice trip!");
        return s;
    }
    let mut book_args = args.clone();
    book_args.insert(key.into(), rows[chosen][key].clone());
    s.say(
        "Please book that one.",
        format!("Please confirm: {} in {city} from {} to {}.", rows[chosen][key], check_in.spoken(), check_out.spoken()),
    );
    let mut result = book_args.clone();
    result.insert(price.into(), rows[chosen][price].clone());
    s.call(
        "Yes, that's right.",
        ToolCall { tool: action.into(), args: book_args },
        ToolResult::Single(result),
        if house { "The house is booked." } else { "Your hotel reservation is confirmed." },
    );
    s.say("Thanks!", "Enjoy your stay!");
    s
}

/// `n` clean dialogues, identical for a fixed `seed` regardless of thread
/// count. Ids are `synth-<seed>-<i>`.
pub fn generate(n: usize, seed: u64) -> Vec<Dialogue> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003).wrapping_add(i as u64));
            let book = rng.random_bool(0.8);
            let refine = rng.random_bool(0.2);
            let script = match rng.random_range(0..7) {
                0 => travel(&mut rng, &BUS, book, refine),
                1 => travel(&mut rng, &FLIGHT, book, refine),
                2 => travel(&mut rng, &TRAIN, book, refine),
                3 => restaurant(&mut rng, book),
                4 => event(&mut rng, book),
                5 => lodging(&mut rng, false, book),
                _ => lodging(&mut rng, true, book),
            };
            Dialogue::from_pairs(format!("synth-{seed}-{i}"), script.turns)
        })
        .collect()
}
