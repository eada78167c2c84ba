# Utils package 